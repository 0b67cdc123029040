#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "zvis/cli_runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"zvis: rare-event sampling via stochastic-control representations"};
    app.require_subcommand(1);

    // run
    std::string config_path;
    zvis::CliOverrides overrides;
    std::uint64_t seed_opt = 0;
    std::string out_dir_opt;
    int threads_opt = -1;
    auto* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("config", config_path, "experiment config file")->required();
    auto* seed_flag = run->add_option("--seed", seed_opt, "override [experiment] seed");
    auto* out_flag = run->add_option("--out-dir", out_dir_opt, "override [experiment] out_dir");
    auto* threads_flag =
        run->add_option("--threads", threads_opt,
                        "worker threads (affects speed only, never results; 0 = hardware)");

    // compare
    std::string results_path;
    std::string oracle_name;
    std::string out_path;
    zvis::CompareOptions cmp;
    auto* compare = app.add_subcommand("compare", "error table of results against an oracle");
    compare->add_option("results", results_path, "results.csv produced by `run`")->required();
    compare->add_option("--oracle", oracle_name, "shell | double_well | bm_mfet")->required();
    compare->add_option("--tol", cmp.tol, "max-abs-error pass threshold");
    compare->add_option("--out", out_path, "write the error table here (default: stdout)");
    compare->add_option("--coord-col", cmp.coord_col, "coordinate column name");
    compare->add_option("--value-col", cmp.value_col, "value column name");
    compare->add_option("--dim", cmp.dim, "shell oracle: dimension");
    compare->add_option("--r1", cmp.r1, "shell oracle: inner radius");
    compare->add_option("--r2", cmp.r2, "shell oracle: outer radius");
    compare->add_option("--beta", cmp.beta, "double-well oracle: inverse temperature");
    compare->add_option("--boundary", cmp.boundary, "double-well oracle: boundary position");
    compare->add_option("--a", cmp.a, "interval oracle: left endpoint");
    compare->add_option("--b", cmp.b, "interval oracle: right endpoint");
    compare->add_option("--sigma", cmp.sigma, "oracle diffusion coefficient");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (*seed_flag) overrides.seed = seed_opt;
            if (*out_flag) overrides.out_dir = out_dir_opt;
            if (*threads_flag) overrides.threads = threads_opt;
            return zvis::run_experiment(config_path, overrides, std::cout);
        }
        if (compare->parsed()) {
            if (oracle_name == "shell") {
                cmp.oracle = zvis::OracleKind::Shell;
            } else if (oracle_name == "double_well") {
                cmp.oracle = zvis::OracleKind::DoubleWell;
            } else if (oracle_name == "bm_mfet") {
                cmp.oracle = zvis::OracleKind::BmMfet;
            } else {
                std::cerr << "unknown oracle '" << oracle_name << "'\n";
                return 64;
            }
            cmp.out_path = out_path;
            return zvis::compare_to_oracle(results_path, cmp, std::cout);
        }
    } catch (const zvis::Error& e) {
        std::cerr << "error [" << zvis::error_code_name(e.code()) << "]: " << e.what() << '\n';
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 64;
    }
    return 0;
}
