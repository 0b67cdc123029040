#include "zvis/policy_iteration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zvis/rng.hpp"

namespace zvis {

const char* api_status_name(ApiStatus s) {
    switch (s) {
        case ApiStatus::Converged: return "CONVERGED";
        case ApiStatus::MaxIters: return "MAX_ITERS";
        case ApiStatus::DivergedControlCap: return "DIVERGED_CONTROL_CAP";
        case ApiStatus::DivergedBlowup: return "DIVERGED_BLOWUP";
    }
    return "UNKNOWN";
}

namespace {

State coord_state(int dim, double coord) {
    State x = State::Zero(dim);
    x[0] = coord;
    return x;
}

std::vector<double> interior_coords(const ApiConfig& config, const SdeModel& model,
                                    const StopDomain& domain) {
    std::vector<double> coords;
    for (double c : config.eval_coords) {
        if (domain.classify(coord_state(model.dim, c)) == Region::Interior)
            coords.push_back(c);
    }
    if (coords.empty())
        throw Error(ErrorCode::InvalidArgument, "policy iteration: no interior eval points");
    return coords;
}

ParametricFunction random_theta_function(const ApiConfig& config, bool radialize) {
    const int L = config.basis.size();
    Eigen::VectorXd theta0(L);
    GaussianStream g(derive_seed(config.mc.seed, 0x7E7Aull), 2);
    for (int l = 0; l < L; ++l) theta0[l] = g.scalar(static_cast<std::uint64_t>(l));
    ParametricFunction f;
    f.basis = config.basis;
    f.theta = theta0;
    f.radialize = radialize;
    return f;
}

// Quad-form policy update u = sigma^T grad Q / (2 Q), with the value floored
// away from zero between grid points; the cap clip keeps the control admissible.
FeedbackPolicy quad_update_policy(const ParametricFunction& q_hat, const SdeModel& model,
                                  double cap) {
    FeedbackPolicy p = optimal_control_quad(
        [q_hat](const State& x) { return std::max(q_hat.value(x), 1e-12); },
        [q_hat](const State& x, Eigen::Ref<State> out) { q_hat.gradient(x, out); }, model);
    p.bound = cap;
    return p;
}

double policy_norm_at(const FeedbackPolicy& policy, const State& x, int noise_dim) {
    Eigen::VectorXd u(noise_dim);
    policy.eval(x, u);
    return u.norm();
}

struct PointEval {
    double cost = 0.0;
    double se = 0.0;
    double censored = 0.0;
    double blowup = 0.0;
};

ApiResult api_core(const ApiConfig& config, const SdeModel& model, const StopDomain& domain) {
    if (!(config.tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "policy iteration: tol must be > 0");
    if (config.max_iters < 1)
        throw Error(ErrorCode::InvalidArgument, "policy iteration: max_iters must be >= 1");
    if (config.basis.size() < 1)
        throw Error(ErrorCode::InvalidArgument, "policy iteration: empty basis");
    const bool quad = config.formulation == Formulation::Quad;
    if (quad && !(config.control_cap > 0.0))
        throw Error(ErrorCode::InvalidArgument, "policy iteration: quad form requires control_cap > 0");
    if (quad && !(config.epsilon_reg > 0.0))
        throw Error(ErrorCode::InvalidArgument, "policy iteration: quad form requires epsilon_reg > 0");

    const bool radialize = model.dim > 1;
    const std::vector<double> coords = interior_coords(config, model, domain);
    const int n_points = static_cast<int>(coords.size());

    CostSpecLog log_spec;
    CostSpecQuad quad_spec;
    if (quad) {
        quad_spec = committor_cost_quad(domain, config.epsilon_reg);
        if (config.terminal_g) quad_spec.terminal_g = config.terminal_g;
    } else {
        log_spec.lambda = config.lambda;
        log_spec.running_f = config.running_f;
        log_spec.epsilon_reg = config.epsilon_reg;
        log_spec.terminal_g = config.terminal_g
                                  ? config.terminal_g
                                  : committor_cost_log(domain, config.epsilon_reg, config.lambda)
                                        .terminal_g;
    }

    FeedbackPolicy policy;
    if (config.initial_policy) {
        policy = *config.initial_policy;
    } else {
        const ParametricFunction f0 = random_theta_function(config, radialize);
        policy = optimal_control_log(f0, quad ? 1.0 : config.lambda, model);
    }
    if (quad) policy.bound = config.control_cap;

    ApiTrace trace;
    trace.eval_coords = coords;
    trace.status = ApiStatus::MaxIters;

    ParametricFunction fit;
    std::vector<double> fitted_prev;

    SimOptions opts;
    if (!quad) opts.running_cost = config.running_f;

    for (int k = 1; k <= config.max_iters; ++k) {
        // Policy evaluation: Monte Carlo cost at every eval point.
        std::vector<PointEval> evals(static_cast<size_t>(n_points));
        bool blowup_diverged = false;
        const std::uint64_t iter_seed = derive_seed(config.mc.seed, static_cast<std::uint64_t>(k));
        for (int j = 0; j < n_points && !blowup_diverged; ++j) {
            const double coord = coords[static_cast<size_t>(j)];
            const std::uint64_t batch_seed = derive_seed(iter_seed, static_cast<std::uint64_t>(j));
            std::vector<StoppedPath> paths;
            if (radialize) {
                StartSampler start = [dim = model.dim, coord](std::uint64_t path_seed) {
                    return sphere_point(dim, coord, path_seed);
                };
                paths = sample_batch_from(model, domain, policy,
                                          quad ? ControlSign::Minus : ControlSign::Plus, start,
                                          config.mc.dt, config.mc.max_steps, config.mc.n_paths,
                                          batch_seed, opts, config.mc.threads);
            } else {
                const State x0 = coord_state(model.dim, coord);
                paths = sample_batch(model, domain, policy,
                                     quad ? ControlSign::Minus : ControlSign::Plus, x0,
                                     config.mc.dt, config.mc.max_steps, config.mc.n_paths,
                                     batch_seed, opts, config.mc.threads);
            }
            long blowups = 0, usable = 0;
            for (const auto& p : paths) {
                if (p.exit == ExitFlag::Blowup) ++blowups;
                if (p.exited()) ++usable;
            }
            const auto n = static_cast<double>(paths.size());
            // a point where most paths blow up, or where none terminate inside
            // the step cap, cannot be evaluated: the iteration has diverged
            if (blowups > config.mc.n_paths / 2 || usable == 0) {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                evals[static_cast<size_t>(j)] =
                    PointEval{nan, 0.0, static_cast<double>(paths.size() - blowups - usable) / n,
                              static_cast<double>(blowups) / n};
                blowup_diverged = true;
                break;
            }
            const McEstimate est = quad ? j2_from_paths(quad_spec, paths, config.mc.censor_warn)
                                        : j1_from_paths(log_spec, paths, config.mc.censor_warn);
            evals[static_cast<size_t>(j)] =
                PointEval{est.estimate, est.std_error, est.censored_fraction, est.blowup_fraction};
        }

        ApiIteration iter;
        iter.k = k;
        for (int j = 0; j < n_points; ++j) {
            iter.cost.push_back(evals[static_cast<size_t>(j)].cost);
            iter.cost_se.push_back(evals[static_cast<size_t>(j)].se);
            iter.censored_fraction.push_back(evals[static_cast<size_t>(j)].censored);
            iter.control_norm.push_back(
                policy_norm_at(policy, coord_state(model.dim, coords[static_cast<size_t>(j)]),
                               model.noise_dim));
        }
        iter.max_control_norm =
            *std::max_element(iter.control_norm.begin(), iter.control_norm.end());

        if (blowup_diverged) {
            iter.theta = Eigen::VectorXd::Zero(config.basis.size());
            trace.iterations.push_back(std::move(iter));
            trace.status = ApiStatus::DivergedBlowup;
            trace.abort_iteration = k;
            break;
        }

        // Projection onto the basis.
        fit = fit_least_squares(config.basis, coords, iter.cost, radialize);
        iter.theta = fit.theta;
        for (int j = 0; j < n_points; ++j)
            iter.fitted.push_back(fit.value_r(coords[static_cast<size_t>(j)]));

        if (k >= 2) {
            double ss = 0.0;
            for (int j = 0; j < n_points; ++j) {
                const double d =
                    iter.fitted[static_cast<size_t>(j)] - fitted_prev[static_cast<size_t>(j)];
                ss += d * d;
            }
            iter.delta_cost = std::sqrt(ss);
        }
        fitted_prev = iter.fitted;
        const double delta = iter.delta_cost;
        trace.iterations.push_back(std::move(iter));

        if (k >= 2 && delta <= config.tol) {
            trace.status = ApiStatus::Converged;
            break;
        }

        // Explicit policy update.
        if (quad) {
            for (int j = 0; j < n_points; ++j) {
                if (!(fit.value_r(coords[static_cast<size_t>(j)]) > 0.0))
                    throw Error(ErrorCode::NonpositiveValue,
                                "policy iteration: fitted second moment not positive at eval point, iteration " +
                                    std::to_string(k),
                                k);
            }
            FeedbackPolicy next = quad_update_policy(fit, model, config.control_cap);
            double unclipped_max = 0.0;
            FeedbackPolicy unclipped = next;
            unclipped.bound.reset();
            for (int j = 0; j < n_points; ++j) {
                unclipped_max = std::max(
                    unclipped_max,
                    policy_norm_at(unclipped,
                                   coord_state(model.dim, coords[static_cast<size_t>(j)]),
                                   model.noise_dim));
            }
            if (unclipped_max > config.control_cap) {
                trace.status = ApiStatus::DivergedControlCap;
                trace.abort_iteration = k;
                policy = next;
                break;
            }
            policy = next;
        } else {
            policy = optimal_control_log(fit, config.lambda, model);
        }
    }

    ApiResult result;
    result.trace = std::move(trace);
    if (fit.theta.size() == 0) {
        // Aborted before the first fit.
        fit.basis = config.basis;
        fit.theta = Eigen::VectorXd::Zero(config.basis.size());
        fit.radialize = radialize;
    }
    result.value = fit;
    if (quad) {
        result.policy = quad_update_policy(fit, model, config.control_cap);
    } else {
        result.policy = optimal_control_log(fit, config.lambda, model);
    }
    return result;
}

} // namespace

ApiResult api_run_log(const ApiConfig& config, const SdeModel& model, const StopDomain& domain) {
    if (config.formulation != Formulation::Log)
        throw Error(ErrorCode::InvalidArgument, "api_run_log: formulation must be LOG");
    if (!(config.lambda > 0.0))
        throw Error(ErrorCode::InvalidArgument, "api_run_log: lambda must be > 0");
    return api_core(config, model, domain);
}

ApiResult api_run_quad(const ApiConfig& config, const SdeModel& model, const StopDomain& domain) {
    if (config.formulation != Formulation::Quad)
        throw Error(ErrorCode::InvalidArgument, "api_run_quad: formulation must be QUAD");
    return api_core(config, model, domain);
}

MonotonicityReport monotonicity_report(const ApiTrace& trace) {
    MonotonicityReport report;
    const size_t m = trace.iterations.size();
    if (m < 2) return report;
    const size_t n_points = trace.eval_coords.size();
    report.defined = true;
    report.per_point.assign(n_points, 0.0);
    long total_hits = 0;
    for (size_t j = 0; j < n_points; ++j) {
        long hits = 0;
        for (size_t i = 0; i + 1 < m; ++i) {
            const auto& a = trace.iterations[i];
            const auto& b = trace.iterations[i + 1];
            if (j >= a.cost.size() || j >= b.cost.size()) continue;
            const double se = std::sqrt(a.cost_se[j] * a.cost_se[j] + b.cost_se[j] * b.cost_se[j]);
            if (b.cost[j] <= a.cost[j] + 3.0 * se) ++hits;
        }
        report.per_point[j] = static_cast<double>(hits) / static_cast<double>(m - 1);
        total_hits += hits;
    }
    report.aggregate = static_cast<double>(total_hits) /
                       (static_cast<double>(m - 1) * static_cast<double>(n_points));
    return report;
}

void write_trace_csv(const ApiTrace& trace, std::ostream& os) {
    os << "iteration,coord,cost,std_error,control_norm,censored_fraction\n";
    char buf[40];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& iter : trace.iterations) {
        for (size_t j = 0; j < trace.eval_coords.size() && j < iter.cost.size(); ++j) {
            os << iter.k << ',' << fmt(trace.eval_coords[j]) << ',' << fmt(iter.cost[j]) << ','
               << fmt(iter.cost_se[j]) << ',' << fmt(iter.control_norm[j]) << ','
               << fmt(iter.censored_fraction[j]) << '\n';
        }
    }
}

} // namespace zvis
