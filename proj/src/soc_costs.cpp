#include "zvis/soc_costs.hpp"

#include <cmath>

#include "zvis/stats.hpp"

namespace zvis {

CostSpecLog committor_cost_log(const StopDomain& domain, double eps, double lambda) {
    if (!(eps > 0.0))
        throw Error(ErrorCode::InvalidArgument,
                    "committor_cost_log: indicator boundary cost requires eps > 0");
    if (!(lambda > 0.0))
        throw Error(ErrorCode::InvalidArgument, "committor_cost_log: lambda must be > 0");
    CostSpecLog spec;
    spec.lambda = lambda;
    spec.epsilon_reg = eps;
    spec.terminal_g = [classify = domain.classify, eps](const State& x) {
        const double indicator = classify(x) == Region::HitB ? 1.0 : 0.0;
        return -std::log(indicator + eps);
    };
    return spec;
}

CostSpecQuad committor_cost_quad(const StopDomain& domain, double eps) {
    if (eps < 0.0)
        throw Error(ErrorCode::InvalidArgument, "committor_cost_quad: eps must be >= 0");
    CostSpecQuad spec;
    spec.epsilon_reg = eps;
    spec.terminal_g = [classify = domain.classify, eps](const State& x) {
        const double indicator = classify(x) == Region::HitB ? 1.0 : 0.0;
        return indicator + eps;
    };
    return spec;
}

double j1_path_cost(const CostSpecLog& spec, const StoppedPath& path) {
    return path.run_cost_u2 / (2.0 * spec.lambda) + path.run_cost_f +
           spec.terminal_g(path.x_final);
}

namespace {

McEstimate reduce(std::span<const StoppedPath> paths,
                  const std::function<double(const StoppedPath&)>& value, double censor_warn,
                  bool flag_overflow) {
    McEstimate out;
    long censored = 0, blowups = 0;
    std::vector<double> samples;
    samples.reserve(paths.size());
    for (const auto& p : paths) {
        if (p.exit == ExitFlag::Blowup) {
            ++blowups;
            continue;
        }
        if (p.exit == ExitFlag::Censored) {
            ++censored;
            continue;
        }
        if (flag_overflow && p.run_cost_u2 > 700.0) out.overflow = true;
        samples.push_back(value(p));
    }
    const auto total = static_cast<double>(paths.size());
    out.censored_fraction = static_cast<double>(censored) / total;
    out.blowup_fraction = static_cast<double>(blowups) / total;
    out.excess_censoring = out.censored_fraction > censor_warn;
    if (samples.empty())
        throw Error(ErrorCode::NoValidSamples, "cost evaluation: no non-censored paths");
    const SampleStats s = sample_stats(samples);
    out.estimate = s.mean;
    out.std_error = s.std_error();
    out.n_used = s.n;
    return out;
}

} // namespace

McEstimate j1_from_paths(const CostSpecLog& spec, std::span<const StoppedPath> paths,
                         double censor_warn) {
    return reduce(
        paths, [&spec](const StoppedPath& p) { return j1_path_cost(spec, p); }, censor_warn,
        false);
}

McEstimate j2_from_paths(const CostSpecQuad& spec, std::span<const StoppedPath> paths,
                         double censor_warn) {
    return reduce(
        paths,
        [&spec](const StoppedPath& p) {
            const double g = spec.terminal_g(p.x_final);
            // exp weight kept in log space until here; one exp per path
            return g * g * std::exp(p.run_cost_u2);
        },
        censor_warn, true);
}

McEstimate eval_J1(const CostSpecLog& spec, const SdeModel& model, const StopDomain& domain,
                   const FeedbackPolicy& policy, const State& x0, const McParams& mc) {
    SimOptions opts;
    opts.running_cost = spec.running_f;
    const auto paths = sample_batch(model, domain, policy, ControlSign::Plus, x0, mc.dt,
                                    mc.max_steps, mc.n_paths, mc.seed, opts, mc.threads);
    return j1_from_paths(spec, paths, mc.censor_warn);
}

McEstimate eval_J2(const CostSpecQuad& spec, const SdeModel& model, const StopDomain& domain,
                   const FeedbackPolicy& policy, const State& x0, const McParams& mc) {
    const auto paths = sample_batch(model, domain, policy, ControlSign::Minus, x0, mc.dt,
                                    mc.max_steps, mc.n_paths, mc.seed, {}, mc.threads);
    return j2_from_paths(spec, paths, mc.censor_warn);
}

namespace {

// u(x) = scale * sigma(x)^T grad(x); shared shape of both optimal controls.
FeedbackPolicy sigma_transpose_policy(GradFn grad, const SdeModel& model, double scale) {
    FeedbackPolicy p;
    if (model.sigma_scalar) {
        p.control = [grad = std::move(grad), s = *model.sigma_scalar * scale](
                        const State& x, Eigen::Ref<Eigen::VectorXd> u) {
            grad(x, u);
            u *= s;
        };
        return p;
    }
    const int d = model.dim;
    const int k = model.noise_dim;
    p.control = [grad = std::move(grad), diffusion = model.diffusion, d, k, scale](
                    const State& x, Eigen::Ref<Eigen::VectorXd> u) {
        Eigen::MatrixXd sigma(d, k);
        State g(d);
        diffusion(x, sigma);
        grad(x, g);
        u.noalias() = scale * (sigma.transpose() * g);
    };
    return p;
}

} // namespace

FeedbackPolicy optimal_control_log(GradFn grad_v1, double lambda, const SdeModel& model) {
    if (!(lambda > 0.0))
        throw Error(ErrorCode::InvalidArgument, "optimal_control_log: lambda must be > 0");
    return sigma_transpose_policy(std::move(grad_v1), model, -lambda);
}

FeedbackPolicy optimal_control_log(const ParametricFunction& v1, double lambda,
                                   const SdeModel& model) {
    return optimal_control_log(
        [v1](const State& x, Eigen::Ref<State> out) { v1.gradient(x, out); }, lambda, model);
}

FeedbackPolicy optimal_control_quad(ScalarFn v2, GradFn grad_v2, const SdeModel& model) {
    GradFn scaled = [v2 = std::move(v2), grad = std::move(grad_v2)](const State& x,
                                                                    Eigen::Ref<State> out) {
        const double v = v2(x);
        if (!(v > 0.0))
            throw Error(ErrorCode::NonpositiveValue,
                        "optimal_control_quad: value function not positive at evaluation point");
        grad(x, out);
        out /= v;
    };
    return sigma_transpose_policy(std::move(scaled), model, 0.5);
}

FeedbackPolicy optimal_control_quad(const ParametricFunction& v2, const SdeModel& model) {
    return optimal_control_quad(
        [v2](const State& x) { return v2.value(x); },
        [v2](const State& x, Eigen::Ref<State> out) { v2.gradient(x, out); }, model);
}

std::vector<double> transform_check(std::span<const double> psi_values, Transform mode,
                                    double lambda) {
    std::vector<double> out;
    out.reserve(psi_values.size());
    if (mode == Transform::Log) {
        if (!(lambda > 0.0))
            throw Error(ErrorCode::InvalidArgument, "transform_check: lambda must be > 0");
        for (double psi : psi_values) {
            if (!(psi > 0.0))
                throw Error(ErrorCode::DomainError,
                            "transform_check: log transform needs positive values");
            out.push_back(-std::log(psi) / lambda);
        }
    } else {
        for (double psi : psi_values) out.push_back(psi * psi);
    }
    return out;
}

} // namespace zvis
