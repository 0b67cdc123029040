#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "zvis/func_approx.hpp"
#include "zvis/sde_engine.hpp"

namespace zvis {

/// Monte Carlo sampling parameters shared by the cost evaluators.
struct McParams {
    double dt = 0.005;
    long n_paths = 1000;
    long max_steps = 100000;
    std::uint64_t seed = 1;
    int threads = 0;                 // 0 = hardware concurrency
    double censor_warn = 0.01;       // excess-censoring threshold
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_used = 0;
    double censored_fraction = 0.0;
    double blowup_fraction = 0.0;
    bool excess_censoring = false;
    bool overflow = false;           // some |log weight| exceeded 700 (quad form)
};

/// Cost functional of the log/MGF form: E[int (|u|^2/(2 lambda) + f) dt + g(X_tau)].
struct CostSpecLog {
    double lambda = 1.0;
    ScalarFn running_f;              // empty means f == 0
    ScalarFn terminal_g;             // evaluated at the exit state
    double epsilon_reg = 0.0;
};

/// Cost functional of the risk-sensitive second-moment form:
/// E[g^2(Y_tau) exp(int |u|^2 dt)].
struct CostSpecQuad {
    ScalarFn terminal_g;
    double epsilon_reg = 0.0;
};

/// Boundary cost g = -log(1_{hit B} + eps) for committor problems.
CostSpecLog committor_cost_log(const StopDomain& domain, double eps, double lambda = 1.0);
/// Boundary data g = 1_{hit B} + eps.
CostSpecQuad committor_cost_quad(const StopDomain& domain, double eps);

double j1_path_cost(const CostSpecLog& spec, const StoppedPath& path);
McEstimate j1_from_paths(const CostSpecLog& spec, std::span<const StoppedPath> paths,
                         double censor_warn = 0.01);
McEstimate j2_from_paths(const CostSpecQuad& spec, std::span<const StoppedPath> paths,
                         double censor_warn = 0.01);

/// Monte Carlo value of J1 under the Plus dynamics.
McEstimate eval_J1(const CostSpecLog& spec, const SdeModel& model, const StopDomain& domain,
                   const FeedbackPolicy& policy, const State& x0, const McParams& mc);

/// Monte Carlo value of J2 under the Minus dynamics; the exponential weight
/// is kept in log space and exponentiated once per path.
McEstimate eval_J2(const CostSpecQuad& spec, const SdeModel& model, const StopDomain& domain,
                   const FeedbackPolicy& policy, const State& x0, const McParams& mc);

/// Minimizer of the log-form Hamiltonian: u(x) = -lambda sigma(x)^T grad v1(x).
FeedbackPolicy optimal_control_log(GradFn grad_v1, double lambda, const SdeModel& model);
FeedbackPolicy optimal_control_log(const ParametricFunction& v1, double lambda,
                                   const SdeModel& model);

/// Minimizer of the quadratic-form Hamiltonian for the Minus dynamics:
/// u(x) = sigma(x)^T grad v2(x) / (2 v2(x)). Throws NonpositiveValue when
/// v2 <= 0 at an evaluation point.
FeedbackPolicy optimal_control_quad(ScalarFn v2, GradFn grad_v2, const SdeModel& model);
FeedbackPolicy optimal_control_quad(const ParametricFunction& v2, const SdeModel& model);

enum class Transform { Log, Sqrt };

/// Applies the inverse transformation mapping a linear-problem solution to a
/// value function: Log gives -log(psi)/lambda, Sqrt gives psi^2.
std::vector<double> transform_check(std::span<const double> psi_values, Transform mode,
                                    double lambda = 1.0);

} // namespace zvis
