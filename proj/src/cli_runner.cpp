#include "zvis/cli_runner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zvis/benchmarks.hpp"
#include "zvis/csv.hpp"
#include "zvis/cv_estimators.hpp"
#include "zvis/policy_iteration.hpp"
#include "zvis/rng.hpp"

namespace zvis {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw Error(ErrorCode::InvalidArgument,
                            origin + ":" + std::to_string(line_no) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw Error(ErrorCode::InvalidArgument,
                            origin + ":" + std::to_string(line_no) + ": empty section name");
            cfg.sections_[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, origin + ":" + std::to_string(line_no) +
                                                        ": expected key = value");
        if (section.empty())
            throw Error(ErrorCode::InvalidArgument, origin + ":" + std::to_string(line_no) +
                                                        ": key outside any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw Error(ErrorCode::InvalidArgument,
                        origin + ":" + std::to_string(line_no) + ": empty key");
        auto& entries = cfg.sections_[section];
        for (const auto& [k, v] : entries) {
            if (k == key)
                throw Error(ErrorCode::InvalidArgument,
                            origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                                "' in [" + section + "]");
        }
        entries.emplace_back(key, ConfigEntry{value, line_no});
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorCode::InvalidArgument, "cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path);
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) return false;
    for (const auto& [k, v] : it->second)
        if (k == key) return true;
    return false;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it != sections_.end()) {
        for (const auto& [k, v] : it->second)
            if (k == key) return v.value;
    }
    throw Error(ErrorCode::InvalidArgument,
                origin_ + ": missing required field '" + key + "' in [" + section + "]");
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) {
    if (!has(section, key)) set(section, key, fallback);
    return get_string(section, key);
}

namespace {

double parse_double_value(const std::string& value, const std::string& where) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size())
            throw Error(ErrorCode::InvalidArgument, where + ": not a number: '" + value + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        throw Error(ErrorCode::InvalidArgument, where + ": not a number: '" + value + "'");
    }
}

} // namespace

double Config::get_double(const std::string& section, const std::string& key) const {
    return parse_double_value(get_string(section, key),
                              origin_ + ": field '" + key + "' in [" + section + "]");
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) {
    if (!has(section, key)) set_double(section, key, fallback);
    return get_double(section, key);
}

long Config::get_long(const std::string& section, const std::string& key) const {
    const double v = get_double(section, key);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v)
        throw Error(ErrorCode::InvalidArgument, origin_ + ": field '" + key + "' in [" + section +
                                                    "] must be an integer");
    return l;
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) {
    if (!has(section, key)) set_long(section, key, fallback);
    return get_long(section, key);
}

std::uint64_t Config::get_seed(const std::string& section, const std::string& key,
                               std::uint64_t fallback) {
    if (!has(section, key)) set(section, key, std::to_string(fallback));
    const std::string v = get_string(section, key);
    try {
        return std::stoull(v);
    } catch (...) {
        throw Error(ErrorCode::InvalidArgument, origin_ + ": field '" + key + "' in [" + section +
                                                    "] must be a nonnegative integer");
    }
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
    const std::string raw = get_string(section, key);
    std::vector<double> out;
    std::string item;
    std::istringstream is(raw);
    while (std::getline(is, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) continue;
        out.push_back(parse_double_value(t, origin_ + ": field '" + key + "' in [" + section + "]"));
    }
    if (out.empty())
        throw Error(ErrorCode::InvalidArgument,
                    origin_ + ": field '" + key + "' in [" + section + "] is an empty list");
    return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    auto& entries = sections_[section];
    for (auto& [k, v] : entries) {
        if (k == key) {
            v.value = value;
            return;
        }
    }
    entries.emplace_back(key, ConfigEntry{value, 0});
}

void Config::set_double(const std::string& section, const std::string& key, double value) {
    set(section, key, format_double(value));
}

void Config::set_long(const std::string& section, const std::string& key, long value) {
    set(section, key, std::to_string(value));
}

void Config::require_known_keys(
    const std::map<std::string, std::vector<std::string>>& allowed) const {
    for (const auto& [section, entries] : sections_) {
        if (section == "provenance") continue;
        const auto it = allowed.find(section);
        if (it == allowed.end())
            throw Error(ErrorCode::InvalidArgument,
                        origin_ + ": unknown section [" + section + "]");
        for (const auto& [key, entry] : entries) {
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw Error(ErrorCode::InvalidArgument,
                            origin_ + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                                "' in [" + section + "]");
        }
    }
}

std::string Config::to_text() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, entries] : sections_) {
        if (!first) os << '\n';
        first = false;
        os << '[' << section << "]\n";
        for (const auto& [key, entry] : entries) os << key << " = " << entry.value << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write file: " + path.string());
    f << content;
}

void write_manifest(Config resolved, const fs::path& out_dir, const std::string& status) {
    resolved.set("provenance", "status", status);
    resolved.set("provenance", "written_at", timestamp_utc());
    write_file(out_dir / "manifest.cfg", resolved.to_text());
}

const std::vector<std::string> kExperimentKeys = {"kind", "seed", "out_dir", "threads"};
const std::vector<std::string> kMcKeys = {"dt", "n_paths", "max_steps"};
const std::vector<std::string> kApiKeys = {"lambda",      "epsilon",     "tol",
                                           "max_iters",   "control_cap", "basis",
                                           "kernel_width", "centers_min", "centers_max",
                                           "n_centers",   "grid_min",    "grid_max",
                                           "grid_points"};

McParams read_mc(Config& cfg, std::uint64_t seed, int threads, double dt_default,
                 long n_paths_default, long max_steps_default) {
    McParams mc;
    mc.dt = cfg.get_double("mc", "dt", dt_default);
    mc.n_paths = cfg.get_long("mc", "n_paths", n_paths_default);
    mc.max_steps = cfg.get_long("mc", "max_steps", max_steps_default);
    mc.seed = seed;
    mc.threads = threads;
    return mc;
}

struct CommonOpts {
    std::uint64_t seed;
    int threads;
    fs::path out_dir;
};

CommonOpts read_common(Config& cfg, const CliOverrides& overrides) {
    CommonOpts c;
    if (overrides.seed) cfg.set("experiment", "seed", std::to_string(*overrides.seed));
    if (overrides.out_dir) cfg.set("experiment", "out_dir", *overrides.out_dir);
    if (overrides.threads) cfg.set_long("experiment", "threads", *overrides.threads);
    c.seed = cfg.get_seed("experiment", "seed", 1);
    c.threads = static_cast<int>(cfg.get_long("experiment", "threads", 0));
    c.out_dir = cfg.get_string("experiment", "out_dir", "runs/" +
                                                            cfg.get_string("experiment", "kind"));
    fs::create_directories(c.out_dir);
    return c;
}

ApiConfig read_api(Config& cfg, const McParams& mc, Formulation form, double grid_lo,
                   double grid_hi) {
    ApiConfig api;
    api.formulation = form;
    api.lambda = cfg.get_double("api", "lambda", 1.0);
    api.epsilon_reg = cfg.get_double("api", "epsilon", form == Formulation::Quad ? 5.0 : 0.1);
    api.tol = cfg.get_double("api", "tol", form == Formulation::Quad ? 1.0 : 0.1);
    api.max_iters = static_cast<int>(cfg.get_long("api", "max_iters", 12));
    if (form == Formulation::Quad) api.control_cap = cfg.get_double("api", "control_cap", 2.0);
    api.basis.kind = rbf_kind_from_name(cfg.get_string("api", "basis", "gaussian"));
    api.basis.width = cfg.get_double("api", "kernel_width", default_rbf_width(api.basis.kind));
    const double c_lo = cfg.get_double("api", "centers_min", grid_lo);
    const double c_hi = cfg.get_double("api", "centers_max", grid_hi);
    const int n_centers = static_cast<int>(cfg.get_long("api", "n_centers", 11));
    api.basis.centers = RbfBasis::linspace(c_lo, c_hi, n_centers);
    const double g_lo = cfg.get_double("api", "grid_min", grid_lo);
    const double g_hi = cfg.get_double("api", "grid_max", grid_hi);
    const int g_n = static_cast<int>(cfg.get_long("api", "grid_points", 51));
    api.eval_coords = RbfBasis::linspace(g_lo, g_hi, g_n);
    api.mc = mc;
    return api;
}

int run_shell_api(Config& cfg, const CliOverrides& overrides, std::ostream& log,
                  Formulation form) {
    cfg.require_known_keys({{"experiment", kExperimentKeys},
                            {"model", {"dim", "r1", "r2", "sigma"}},
                            {"mc", kMcKeys},
                            {"api", kApiKeys}});
    const CommonOpts common = read_common(cfg, overrides);

    const int dim = static_cast<int>(cfg.get_long("model", "dim"));
    const double r1 = cfg.get_double("model", "r1");
    const double r2 = cfg.get_double("model", "r2");
    const double sigma = cfg.get_double("model", "sigma", 1.0);
    const ShellProblem problem(dim, r1, r2, sigma);

    const McParams mc = read_mc(cfg, common.seed, common.threads, 0.005, 1000, 20000);
    const ApiConfig api = read_api(cfg, mc, form, r1, r2);

    const SdeModel model = problem.model();
    const StopDomain domain = problem.domain();
    const ApiResult result = form == Formulation::Quad ? api_run_quad(api, model, domain)
                                                       : api_run_log(api, model, domain);

    // Results over the evaluated grid (boundary points carry no estimate).
    std::ostringstream results;
    results << "r,cost_value,committor_estimate,oracle,abs_error\n";
    for (double r : result.trace.eval_coords) {
        const double v = result.value.value_r(r);
        const double committor = form == Formulation::Quad
                                     ? std::sqrt(std::max(v, 0.0)) - api.epsilon_reg
                                     : std::exp(-v) - api.epsilon_reg;
        const double oracle = problem.committor(r);
        write_csv_row(results, {format_double(r), format_double(v), format_double(committor),
                                format_double(oracle), format_double(std::fabs(committor - oracle))});
    }
    write_file(common.out_dir / "results.csv", results.str());

    std::ostringstream trace;
    write_trace_csv(result.trace, trace);
    write_file(common.out_dir / "trace.csv", trace.str());
    write_file(common.out_dir / "value.txt", result.value.to_record());

    const std::string status = api_status_name(result.trace.status);
    write_manifest(cfg, common.out_dir, status);
    log << "status=" << status << " iterations=" << result.trace.iterations.size() << '\n';

    const bool diverged = result.trace.status == ApiStatus::DivergedControlCap ||
                          result.trace.status == ApiStatus::DivergedBlowup;
    return diverged ? 2 : 0;
}

int run_double_well(Config& cfg, const CliOverrides& overrides, std::ostream& log) {
    cfg.require_known_keys({{"experiment", kExperimentKeys},
                            {"model", {"beta", "boundary"}},
                            {"grid", {"x_min", "x_max", "points"}},
                            {"dw", {"epsilon", "mode", "quadrature_points"}},
                            {"mc", kMcKeys},
                            {"api", kApiKeys}});
    const CommonOpts common = read_common(cfg, overrides);

    DoubleWellProblem problem;
    problem.beta = cfg.get_double("model", "beta", 4.0);
    problem.barrier_pos = cfg.get_double("model", "boundary", 1.5);
    problem.epsilon_reg = cfg.get_double("dw", "epsilon", 0.2);
    const long quad_points = cfg.get_long("dw", "quadrature_points", 100000);
    const std::string mode = cfg.get_string("dw", "mode", "figure");
    if (mode != "figure" && mode != "api")
        throw Error(ErrorCode::InvalidArgument,
                    cfg.origin() + ": field 'mode' in [dw] must be 'figure' or 'api'");

    const double x_min = cfg.get_double("grid", "x_min", -problem.barrier_pos);
    const double x_max = cfg.get_double("grid", "x_max", problem.barrier_pos);
    const int points = static_cast<int>(cfg.get_long("grid", "points", 61));
    const std::vector<double> xs = RbfBasis::linspace(x_min, x_max, points);

    std::string status = "OK";
    int exit_code = 0;
    ParametricFunction fitted;
    bool have_fit = false;

    if (mode == "api") {
        const McParams mc = read_mc(cfg, common.seed, common.threads, 0.005, 1000, 40000);
        ApiConfig api = read_api(cfg, mc, Formulation::Log, x_min, x_max);
        api.eval_coords = xs;
        const ApiResult result = api_run_log(api, problem.model(), problem.domain());
        status = api_status_name(result.trace.status);
        fitted = result.value;
        have_fit = true;
        std::ostringstream trace;
        write_trace_csv(result.trace, trace);
        write_file(common.out_dir / "trace.csv", trace.str());
        write_file(common.out_dir / "value.txt", result.value.to_record());
        const bool diverged = result.trace.status == ApiStatus::DivergedControlCap ||
                              result.trace.status == ApiStatus::DivergedBlowup;
        exit_code = diverged ? 2 : 0;
    }

    const double api_eps = have_fit ? cfg.get_double("api", "epsilon", 0.1) : 0.0;
    const StopDomain dw_domain = problem.domain();
    std::ostringstream results;
    results << "x,committor,potential,potential_log_biased,potential_quad_biased";
    if (have_fit) results << ",api_cost,api_committor,abs_error";
    results << '\n';
    for (double x : xs) {
        const double phi = problem.committor(x, quad_points);
        std::vector<std::string> row = {
            format_double(x), format_double(phi),
            format_double(DoubleWellProblem::potential(x)),
            format_double(problem.biased_potential(x, Formulation::Log, quad_points)),
            format_double(problem.biased_potential(x, Formulation::Quad, quad_points))};
        if (have_fit) {
            State xs1(1);
            xs1[0] = x;
            if (dw_domain.classify(xs1) == Region::Interior) {
                const double cost = fitted.value_r(x);
                const double committor = std::exp(-cost) - api_eps;
                row.push_back(format_double(cost));
                row.push_back(format_double(committor));
                row.push_back(format_double(std::fabs(committor - phi)));
            } else {
                row.insert(row.end(), {"na", "na", "na"});
            }
        }
        write_csv_row(results, row);
    }
    write_file(common.out_dir / "results.csv", results.str());
    write_manifest(cfg, common.out_dir, status);
    log << "status=" << status << '\n';
    return exit_code;
}

int run_ou_mfet_cv(Config& cfg, const CliOverrides& overrides, std::ostream& log) {
    cfg.require_known_keys({{"experiment", kExperimentKeys},
                            {"model", {"dim", "beta", "radius"}},
                            {"mc", kMcKeys},
                            {"cv", {"n_seeds", "n_reference"}}});
    const CommonOpts common = read_common(cfg, overrides);

    const int dim = static_cast<int>(cfg.get_long("model", "dim", 10));
    const double beta = cfg.get_double("model", "beta", 10.0);
    const double radius = cfg.get_double("model", "radius", 1.2);
    const OuModel ou(dim, beta, radius);

    McParams mc = read_mc(cfg, common.seed, common.threads, 1e-3, 10, 30000);
    const long n_seeds = cfg.get_long("cv", "n_seeds", 10);
    const long n_reference = cfg.get_long("cv", "n_reference", 10000);

    const SdeModel model = ou.model();
    const StopDomain domain = ou.domain();
    const ControlVariateSpec spec = ou.approximate_mfet_cv();
    const State x0 = State::Zero(dim);

    std::ostringstream results;
    results << "kind,seed_index,n_paths,estimate,std_error,crude_estimate,crude_std_error\n";
    for (long s = 0; s < n_seeds; ++s) {
        McParams mc_s = mc;
        mc_s.seed = derive_seed(common.seed, static_cast<std::uint64_t>(s + 1));
        const CvResult r = mfet_control_variate(model, domain, spec, x0, mc_s);
        write_csv_row(results, {"seed", std::to_string(s), std::to_string(mc.n_paths),
                                format_double(r.estimate), format_double(r.std_error),
                                format_double(r.crude_estimate),
                                format_double(r.crude_std_error)});
    }
    McParams mc_ref = mc;
    mc_ref.seed = derive_seed(common.seed, 0);
    mc_ref.n_paths = n_reference;
    const CvResult ref = mfet_control_variate(model, domain, spec, x0, mc_ref);
    write_csv_row(results, {"reference", "-1", std::to_string(n_reference),
                            format_double(ref.estimate), format_double(ref.std_error),
                            format_double(ref.crude_estimate),
                            format_double(ref.crude_std_error)});
    write_file(common.out_dir / "results.csv", results.str());
    write_manifest(cfg, common.out_dir, "OK");
    log << "reference crude=" << ref.crude_estimate << " cv=" << ref.estimate << '\n';
    return 0;
}

int run_mgf_sweep(Config& cfg, const CliOverrides& overrides, std::ostream& log) {
    cfg.require_known_keys({{"experiment", kExperimentKeys},
                            {"model", {"a", "b", "sigma", "x0"}},
                            {"mc", kMcKeys},
                            {"mgf", {"lambdas"}}});
    const CommonOpts common = read_common(cfg, overrides);

    const double a = cfg.get_double("model", "a", -1.0);
    const double b = cfg.get_double("model", "b", 1.0);
    const double sigma = cfg.get_double("model", "sigma", 1.0);
    const double x0v = cfg.get_double("model", "x0", 0.0);
    cfg.get_string("mgf", "lambdas", "0.5,0.25,0.125");
    const std::vector<double> lambdas = cfg.get_double_list("mgf", "lambdas");

    const McParams mc = read_mc(cfg, common.seed, common.threads, 1e-3, 10000, 30000);
    const SdeModel model = SdeModel::brownian(1, sigma);
    const StopDomain domain = StopDomain::interval(a, b);
    State x0(1);
    x0[0] = x0v;

    const MgfSweepResult sweep = mgf_tau_sweep(model, domain, x0, lambdas, mc);

    // lambda = 0 row carries the plain MFET estimate from the same batch.
    std::ostringstream results;
    results << "lambda,estimate,std_error,n_used\n";
    for (size_t i = 0; i < sweep.lambdas.size(); ++i) {
        const McEstimate& e = sweep.estimates[i];
        write_csv_row(results, {format_double(sweep.lambdas[i]), format_double(e.estimate),
                                format_double(e.std_error), std::to_string(e.n_used)});
    }
    write_csv_row(results, {format_double(0.0), format_double(sweep.mfet.estimate),
                            format_double(sweep.mfet.std_error),
                            std::to_string(sweep.mfet.n_used)});
    write_file(common.out_dir / "results.csv", results.str());
    write_manifest(cfg, common.out_dir, "OK");
    log << "mfet=" << sweep.mfet.estimate << '\n';
    return 0;
}

} // namespace

int run_experiment(const std::string& config_path, const CliOverrides& overrides,
                   std::ostream& log) {
    Config cfg = Config::parse_file(config_path);
    const std::string kind = cfg.get_string("experiment", "kind");
    if (kind == "shell_api_log") return run_shell_api(cfg, overrides, log, Formulation::Log);
    if (kind == "shell_api_quad") return run_shell_api(cfg, overrides, log, Formulation::Quad);
    if (kind == "double_well") return run_double_well(cfg, overrides, log);
    if (kind == "ou_mfet_cv") return run_ou_mfet_cv(cfg, overrides, log);
    if (kind == "mgf_sweep") return run_mgf_sweep(cfg, overrides, log);
    throw Error(ErrorCode::InvalidArgument,
                cfg.origin() + ": unknown experiment kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Oracle comparison
// ---------------------------------------------------------------------------

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw Error(ErrorCode::InvalidArgument, "results file has no column '" + name + "'");
    }
};

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open results file: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream is(line);
        std::string cell;
        while (std::getline(is, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = cells;
            first = false;
        } else {
            table.rows.push_back(cells);
        }
    }
    if (first) throw Error(ErrorCode::InvalidArgument, "results file is empty: " + path);
    return table;
}

} // namespace

int compare_to_oracle(const std::string& results_csv, const CompareOptions& options,
                      std::ostream& log) {
    const CsvTable table = read_csv(results_csv);

    std::string coord_col = options.coord_col;
    std::string value_col = options.value_col;
    if (coord_col.empty()) coord_col = options.oracle == OracleKind::Shell ? "r" : "x";
    if (value_col.empty()) {
        switch (options.oracle) {
            case OracleKind::Shell: value_col = "committor_estimate"; break;
            case OracleKind::DoubleWell: value_col = "api_committor"; break;
            case OracleKind::BmMfet: value_col = "estimate"; break;
        }
    }
    const int ci = table.column(coord_col);
    const int vi = table.column(value_col);

    std::optional<ShellProblem> shell;
    std::optional<DoubleWellProblem> dw;
    if (options.oracle == OracleKind::Shell)
        shell.emplace(options.dim, options.r1, options.r2, options.sigma);
    if (options.oracle == OracleKind::DoubleWell) {
        dw.emplace();
        dw->beta = options.beta;
        dw->barrier_pos = options.boundary;
    }

    std::ostringstream out;
    out << coord_col << ',' << value_col << ",oracle,abs_error\n";
    double max_abs = 0.0, sum_sq = 0.0;
    long n_valid = 0;
    for (const auto& row : table.rows) {
        if (ci >= static_cast<int>(row.size()) || vi >= static_cast<int>(row.size())) continue;
        double coord, value;
        try {
            coord = std::stod(row[static_cast<size_t>(ci)]);
            value = std::stod(row[static_cast<size_t>(vi)]);
        } catch (...) {
            continue;
        }
        double oracle;
        try {
            switch (options.oracle) {
                case OracleKind::Shell: oracle = shell->committor(coord); break;
                case OracleKind::DoubleWell: oracle = dw->committor(coord); break;
                case OracleKind::BmMfet:
                    oracle = bm_interval_mfet_exact(options.a, options.b, coord, options.sigma);
                    break;
                default: oracle = 0.0;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
            write_csv_row(out, {format_double(coord), format_double(value), "na", "na"});
            continue;
        }
        const double err = std::fabs(value - oracle);
        max_abs = std::max(max_abs, err);
        sum_sq += err * err;
        ++n_valid;
        write_csv_row(out, {format_double(coord), format_double(value), format_double(oracle),
                            format_double(err)});
    }
    if (n_valid == 0)
        throw Error(ErrorCode::NoValidSamples, "compare: no rows inside the oracle domain");
    const double rmse = std::sqrt(sum_sq / static_cast<double>(n_valid));
    write_csv_row(out, {"max_abs_error", format_double(max_abs), "", ""});
    write_csv_row(out, {"rmse", format_double(rmse), "", ""});

    if (options.out_path.empty()) {
        log << out.str();
    } else {
        write_file(options.out_path, out.str());
    }
    log << "max_abs_error=" << max_abs << " rmse=" << rmse << " tol=" << options.tol << " "
        << (max_abs <= options.tol ? "PASS" : "FAIL") << '\n';
    return max_abs <= options.tol ? 0 : 1;
}

} // namespace zvis
