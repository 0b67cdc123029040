#include "zvis/sde_engine.hpp"

#include <cmath>
#include <thread>

#include "zvis/rng.hpp"

namespace zvis {

namespace {

constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kStartStream = 1;

int resolve_threads(int requested, long n_tasks) {
    int t = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    if (static_cast<long>(t) > n_tasks) t = static_cast<int>(n_tasks);
    return t;
}

} // namespace

SdeModel SdeModel::brownian(int dim, double sigma) {
    SdeModel m;
    m.dim = dim;
    m.noise_dim = dim;
    m.drift = [](const State&, Eigen::Ref<State> out) { out.setZero(); };
    m.sigma_scalar = sigma;
    return m;
}

SdeModel SdeModel::gradient_drift(int dim, ScalarFn V, GradFn grad_V, double beta) {
    if (beta <= 0.0) throw Error(ErrorCode::InvalidArgument, "gradient_drift: beta must be > 0");
    SdeModel m;
    m.dim = dim;
    m.noise_dim = dim;
    m.potential = std::move(V);
    m.drift = [g = std::move(grad_V)](const State& x, Eigen::Ref<State> out) {
        g(x, out);
        out = -out;
    };
    m.sigma_scalar = std::sqrt(2.0 / beta);
    return m;
}

SdeModel SdeModel::linear_drift(const Eigen::MatrixXd& A, double beta) {
    if (A.rows() != A.cols())
        throw Error(ErrorCode::InvalidArgument, "linear_drift: A must be square");
    if (beta <= 0.0) throw Error(ErrorCode::InvalidArgument, "linear_drift: beta must be > 0");
    SdeModel m;
    m.dim = static_cast<int>(A.rows());
    m.noise_dim = m.dim;
    m.drift = [A](const State& x, Eigen::Ref<State> out) { out.noalias() = -(A * x); };
    m.sigma_scalar = std::sqrt(2.0 / beta);
    return m;
}

void SdeModel::sigma_matrix(const State& x, Eigen::Ref<Eigen::MatrixXd> out) const {
    if (sigma_scalar) {
        out.setZero();
        out.diagonal().setConstant(*sigma_scalar);
        return;
    }
    diffusion(x, out);
}

StopDomain StopDomain::spherical_shell(double r1, double r2) {
    if (!(r1 > 0.0) || !(r2 > r1))
        throw Error(ErrorCode::InvalidArgument, "spherical_shell requires 0 < R1 < R2");
    StopDomain d;
    d.description = "shell";
    d.classify = [r1, r2](const State& x) {
        const double r = x.norm();
        if (r <= r1) return Region::HitA;
        if (r >= r2) return Region::HitB;
        return Region::Interior;
    };
    return d;
}

StopDomain StopDomain::interval(double a, double b) {
    if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "interval requires a < b");
    StopDomain d;
    d.description = "interval";
    d.classify = [a, b](const State& x) {
        const double v = x[0];
        if (v <= a) return Region::HitA;
        if (v >= b) return Region::HitB;
        return Region::Interior;
    };
    return d;
}

StopDomain StopDomain::symmetric_wells(double c) {
    if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "symmetric_wells requires c > 0");
    StopDomain d = interval(-c, c);
    d.description = "double_well";
    return d;
}

StopDomain StopDomain::ball(double radius) {
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball requires radius > 0");
    StopDomain d;
    d.description = "ball";
    d.classify = [radius](const State& x) {
        return x.norm() >= radius ? Region::HitB : Region::Interior;
    };
    return d;
}

namespace {

template <bool Record>
StoppedPath run_path(const SdeModel& model, const StopDomain& domain,
                     const FeedbackPolicy& policy, ControlSign sign, const State& x0,
                     double dt, long max_steps, std::uint64_t seed, const SimOptions& opts,
                     std::vector<State>* states) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "simulate_until_exit: dt must be > 0");
    if (max_steps < 1)
        throw Error(ErrorCode::InvalidArgument, "simulate_until_exit: max_steps must be >= 1");
    if (x0.size() != model.dim)
        throw Error(ErrorCode::InvalidArgument, "simulate_until_exit: x0 has wrong dimension");
    if (domain.classify(x0) != Region::Interior)
        throw Error(ErrorCode::InvalidArgument, "simulate_until_exit: x0 does not classify INTERIOR");

    const int d = model.dim;
    const int k = model.noise_dim;
    const double sqrt_dt = std::sqrt(dt);
    const double sign_factor = (sign == ControlSign::Plus) ? 1.0 : -1.0;
    const bool has_policy = !policy.is_zero && policy.control != nullptr;
    const bool has_f = static_cast<bool>(opts.running_cost);
    const bool has_phi = static_cast<bool>(opts.martingale_grad);

    GaussianStream noise(seed, kNoiseStream);

    State x = x0;
    State b(d), grad_phi(d);
    Eigen::VectorXd u(k), dB(k);
    Eigen::MatrixXd sigma;
    Eigen::VectorXd sigT_grad(k);
    if (!model.sigma_scalar) sigma.resize(d, k);

    StoppedPath path;
    path.x_final = x;
    if constexpr (Record) states->push_back(x);

    for (long step = 0; step < max_steps; ++step) {
        if (has_policy) policy.eval(x, u);
        model.drift(x, b);
        noise.fill(static_cast<std::uint64_t>(step), dB);
        dB *= sqrt_dt;

        if (!model.sigma_scalar) model.diffusion(x, sigma);

        if (has_f) path.run_cost_f += opts.running_cost(x) * dt;
        if (has_phi) {
            opts.martingale_grad(x, grad_phi);
            if (model.sigma_scalar) {
                path.martingale += *model.sigma_scalar * grad_phi.dot(dB);
            } else {
                sigT_grad.noalias() = sigma.transpose() * grad_phi;
                path.martingale += sigT_grad.dot(dB);
            }
        }

        if (has_policy) {
            const double u2 = u.squaredNorm();
            path.run_cost_u2 += u2 * dt;
            // log dP^u/dP for the drift actually applied (b + sigma*u_eff).
            // The likelihood formula -1/2 int |u|^2 + int u.dB uses increments of
            // the reference-measure Brownian motion, which on the controlled path
            // are dB_sim + u_eff dt; substituting gives the exact discrete ratio
            // u_eff.dB_sim + 1/2 |u_eff|^2 dt.
            path.log_lr += sign_factor * u.dot(dB) + 0.5 * u2 * dt;
            if (model.sigma_scalar) {
                x += dt * b + *model.sigma_scalar * (sign_factor * dt * u + dB);
            } else {
                x += dt * b;
                x.noalias() += sigma * (sign_factor * dt * u + dB);
            }
        } else {
            if (model.sigma_scalar) {
                x += dt * b + *model.sigma_scalar * dB;
            } else {
                x += dt * b;
                x.noalias() += sigma * dB;
            }
        }

        path.n_steps = step + 1;
        if constexpr (Record) states->push_back(x);

        if (!x.allFinite())
            throw Error(ErrorCode::NumericalBlowup,
                        "non-finite state at step " + std::to_string(step), step);

        const Region region = domain.classify(x);
        if (region != Region::Interior) {
            path.exit = (region == Region::HitA) ? ExitFlag::HitA : ExitFlag::HitB;
            path.tau = static_cast<double>(path.n_steps) * dt;
            path.x_final = x;
            return path;
        }
    }

    path.exit = ExitFlag::Censored;
    path.n_steps = max_steps;
    path.tau = static_cast<double>(max_steps) * dt;
    path.x_final = x;
    return path;
}

} // namespace

StoppedPath simulate_until_exit(const SdeModel& model, const StopDomain& domain,
                                const FeedbackPolicy& policy, ControlSign sign,
                                const State& x0, double dt, long max_steps,
                                std::uint64_t seed, const SimOptions& opts) {
    return run_path<false>(model, domain, policy, sign, x0, dt, max_steps, seed, opts, nullptr);
}

RecordedPath simulate_recorded(const SdeModel& model, const StopDomain& domain,
                               const FeedbackPolicy& policy, ControlSign sign,
                               const State& x0, double dt, long max_steps,
                               std::uint64_t seed, const SimOptions& opts) {
    RecordedPath rec;
    rec.path = run_path<true>(model, domain, policy, sign, x0, dt, max_steps, seed, opts,
                              &rec.states);
    return rec;
}

State sphere_point(int dim, double radius, std::uint64_t path_seed) {
    GaussianStream g(path_seed, kStartStream);
    State x(dim);
    g.fill(0, x);
    const double n = x.norm();
    if (n == 0.0) {
        x.setZero();
        x[0] = radius;
        return x;
    }
    x *= radius / n;
    return x;
}

namespace {

std::vector<StoppedPath> batch_impl(const SdeModel& model, const StopDomain& domain,
                                    const FeedbackPolicy& policy, ControlSign sign,
                                    const State* fixed_x0, const StartSampler* start,
                                    double dt, long max_steps, long n_paths,
                                    std::uint64_t base_seed, const SimOptions& opts,
                                    int n_threads) {
    if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "sample_batch: n_paths must be >= 1");

    std::vector<StoppedPath> paths(static_cast<size_t>(n_paths));
    const int threads = resolve_threads(n_threads, n_paths);

    auto worker = [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
            const State x0 = fixed_x0 ? *fixed_x0 : (*start)(seed);
            try {
                paths[static_cast<size_t>(i)] =
                    simulate_until_exit(model, domain, policy, sign, x0, dt, max_steps, seed, opts);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NumericalBlowup) throw;
                StoppedPath p;
                p.exit = ExitFlag::Blowup;
                p.x_final = x0;
                p.blowup_step = e.index();
                paths[static_cast<size_t>(i)] = p;
            }
        }
    };

    if (threads == 1) {
        worker(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
        pool.reserve(static_cast<size_t>(threads));
        const long chunk = (n_paths + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const long lo = static_cast<long>(t) * chunk;
            const long hi = std::min(n_paths, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi, t] {
                try {
                    worker(lo, hi);
                } catch (...) {
                    errors[static_cast<size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return paths;
}

} // namespace

std::vector<StoppedPath> sample_batch(const SdeModel& model, const StopDomain& domain,
                                      const FeedbackPolicy& policy, ControlSign sign,
                                      const State& x0, double dt, long max_steps,
                                      long n_paths, std::uint64_t base_seed,
                                      const SimOptions& opts, int n_threads) {
    return batch_impl(model, domain, policy, sign, &x0, nullptr, dt, max_steps, n_paths,
                      base_seed, opts, n_threads);
}

std::vector<StoppedPath> sample_batch_from(const SdeModel& model, const StopDomain& domain,
                                           const FeedbackPolicy& policy, ControlSign sign,
                                           const StartSampler& start, double dt, long max_steps,
                                           long n_paths, std::uint64_t base_seed,
                                           const SimOptions& opts, int n_threads) {
    return batch_impl(model, domain, policy, sign, nullptr, &start, dt, max_steps, n_paths,
                      base_seed, opts, n_threads);
}

WeightedEstimate reweighted_expectation(const std::vector<StoppedPath>& paths,
                                        const std::function<double(const StoppedPath&)>& payoff) {
    double sum = 0.0, sum_sq = 0.0;
    long n = 0;
    for (const auto& p : paths) {
        if (!p.exited()) continue;
        const double v = payoff(p) * std::exp(-p.log_lr);
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    if (n == 0)
        throw Error(ErrorCode::NoValidSamples, "reweighted_expectation: all paths censored");
    WeightedEstimate est;
    est.n_used = n;
    est.estimate = sum / static_cast<double>(n);
    if (n > 1) {
        const double var = (sum_sq - static_cast<double>(n) * est.estimate * est.estimate) /
                           static_cast<double>(n - 1);
        est.std_error = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    }
    return est;
}

} // namespace zvis
