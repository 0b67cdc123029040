#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "zvis/errors.hpp"
#include "zvis/policy.hpp"

namespace zvis {

using DriftFn = std::function<void(const State&, Eigen::Ref<State>)>;
using DiffusionFn = std::function<void(const State&, Eigen::Ref<Eigen::MatrixXd>)>;
using ScalarFn = std::function<double(const State&)>;
using GradFn = std::function<void(const State&, Eigen::Ref<State>)>;

/// Time-homogeneous SDE dX = b(X)dt + sigma(X)dB with B in R^k, k <= dim.
struct SdeModel {
    int dim = 0;
    int noise_dim = 0;
    DriftFn drift;
    DiffusionFn diffusion;
    // Set when sigma(x) == sigma_scalar * I; the integrator takes a cheaper path.
    std::optional<double> sigma_scalar;
    // Retained by the gradient-drift constructor so tests can check b = -grad V.
    ScalarFn potential;

    /// Pure diffusion dX = sigma dB.
    static SdeModel brownian(int dim, double sigma);

    /// Gradient system dX = -grad V dt + sqrt(2/beta) dB.
    static SdeModel gradient_drift(int dim, ScalarFn V, GradFn grad_V, double beta);

    /// Linear drift dX = -A X dt + sqrt(2/beta) dB.
    static SdeModel linear_drift(const Eigen::MatrixXd& A, double beta);

    /// sigma(x) as a dense matrix (uses the scalar fast path when available).
    void sigma_matrix(const State& x, Eigen::Ref<Eigen::MatrixXd> out) const;
};

enum class Region { Interior, HitA, HitB };

/// Open set D with target / non-target boundary classification.
struct StopDomain {
    std::function<Region(const State&)> classify;
    std::string description;

    /// {R1 < |x| < R2}: HitA at |x| <= R1, HitB at |x| >= R2.
    static StopDomain spherical_shell(double r1, double r2);
    /// 1D interval (a, b): HitA at x <= a, HitB at x >= b.
    static StopDomain interval(double a, double b);
    /// Half-line pair for the double well: HitA at x <= -c, HitB at x >= c.
    static StopDomain symmetric_wells(double c);
    /// {|x| < R}: HitB at |x| >= R (single absorbing boundary).
    static StopDomain ball(double radius);
};

/// Selects the sign of the control in the integrated drift: Plus gives
/// b + sigma*u, Minus gives b - sigma*u.
enum class ControlSign { Plus, Minus };

enum class ExitFlag { HitA, HitB, Censored, Blowup };

struct StoppedPath {
    ExitFlag exit = ExitFlag::Censored;
    double tau = 0.0;          // n_steps * dt, exactly
    State x_final;
    double run_cost_f = 0.0;   // accumulated  integral f dt
    double run_cost_u2 = 0.0;  // accumulated  integral |u|^2 dt
    double log_lr = 0.0;       // accumulated  log dP^u/dP along the path
    double martingale = 0.0;   // accumulated  integral (sigma^T grad Phi) . dB
    long n_steps = 0;
    long blowup_step = -1;     // >= 0 on paths flagged by sample_batch

    bool ok() const { return exit != ExitFlag::Blowup; }
    bool exited() const { return exit == ExitFlag::HitA || exit == ExitFlag::HitB; }
};

/// Optional per-step accumulators and instrumentation.
struct SimOptions {
    ScalarFn running_cost;            // f, left-point evaluation
    GradFn martingale_grad;           // grad Phi, left-point Ito evaluation
    bool record_trajectory = false;   // diagnostic; fills `trajectory` below
};

struct RecordedPath {
    StoppedPath path;
    std::vector<State> states;  // x0 .. x_final when recording was requested
};

StoppedPath simulate_until_exit(const SdeModel& model, const StopDomain& domain,
                                const FeedbackPolicy& policy, ControlSign sign,
                                const State& x0, double dt, long max_steps,
                                std::uint64_t seed, const SimOptions& opts = {});

RecordedPath simulate_recorded(const SdeModel& model, const StopDomain& domain,
                               const FeedbackPolicy& policy, ControlSign sign,
                               const State& x0, double dt, long max_steps,
                               std::uint64_t seed, const SimOptions& opts = {});

/// Start-state generator for batches whose paths begin at random points;
/// receives the per-path seed so draws stay reproducible.
using StartSampler = std::function<State(std::uint64_t path_seed)>;

/// Batch of independent paths from a fixed start. Path i is driven by
/// derive_seed(base_seed, i); results are identical for any thread count.
std::vector<StoppedPath> sample_batch(const SdeModel& model, const StopDomain& domain,
                                      const FeedbackPolicy& policy, ControlSign sign,
                                      const State& x0, double dt, long max_steps,
                                      long n_paths, std::uint64_t base_seed,
                                      const SimOptions& opts = {}, int n_threads = 0);

std::vector<StoppedPath> sample_batch_from(const SdeModel& model, const StopDomain& domain,
                                           const FeedbackPolicy& policy, ControlSign sign,
                                           const StartSampler& start, double dt, long max_steps,
                                           long n_paths, std::uint64_t base_seed,
                                           const SimOptions& opts = {}, int n_threads = 0);

/// Uniform point on the sphere of the given radius (unit direction from
/// normalized Gaussians), deterministic in `path_seed`.
State sphere_point(int dim, double radius, std::uint64_t path_seed);

struct WeightedEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_used = 0;
};

/// Importance-sampling mean of payoff(path) * exp(-log_lr) over the
/// non-censored paths: E[S(X)] = E_{P^u}[S(X) L_tau^{-1}(X)].
WeightedEstimate reweighted_expectation(const std::vector<StoppedPath>& paths,
                                        const std::function<double(const StoppedPath&)>& payoff);

} // namespace zvis
