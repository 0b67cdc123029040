#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "zvis/soc_costs.hpp"

namespace zvis {

enum class Formulation { Log, Quad };

/// Approximate policy iteration configuration. Evaluation points are radial
/// coordinates: for dim > 1 each path starts uniformly on the sphere of that
/// radius, in 1D the coordinate is the start point itself.
struct ApiConfig {
    Formulation formulation = Formulation::Log;
    double lambda = 1.0;
    double epsilon_reg = 0.1;
    RbfBasis basis;
    std::vector<double> eval_coords;
    McParams mc;
    double tol = 0.1;
    int max_iters = 20;
    double control_cap = 0.0;                     // delta guard, quad form only
    ScalarFn running_f;                           // optional f (log form)
    ScalarFn terminal_g;                          // overrides the committor boundary cost
    std::optional<FeedbackPolicy> initial_policy; // overrides the random theta0 start
};

enum class ApiStatus { Converged, MaxIters, DivergedControlCap, DivergedBlowup };

const char* api_status_name(ApiStatus s);

struct ApiIteration {
    int k = 0;
    Eigen::VectorXd theta;                 // fitted parameters of this iterate
    std::vector<double> cost;              // raw MC estimate per eval point
    std::vector<double> cost_se;
    std::vector<double> censored_fraction;
    std::vector<double> control_norm;      // |c_k| at each eval point
    std::vector<double> fitted;            // fitted iterate at the eval points
    double delta_cost = 0.0;               // ||fitted_k - fitted_{k-1}||_2, k >= 2
    double max_control_norm = 0.0;
};

struct ApiTrace {
    std::vector<double> eval_coords;       // interior points actually evaluated
    std::vector<ApiIteration> iterations;
    ApiStatus status = ApiStatus::MaxIters;
    int abort_iteration = -1;              // set on divergence statuses
};

struct ApiResult {
    FeedbackPolicy policy;
    ParametricFunction value;
    ApiTrace trace;
};

/// Howard iteration for the log/MGF cost: Monte Carlo policy evaluation under
/// the Plus dynamics, least-squares projection onto the basis, explicit update
/// c <- -lambda sigma^T grad J_hat.
ApiResult api_run_log(const ApiConfig& config, const SdeModel& model, const StopDomain& domain);

/// Howard iteration for the second-moment cost: evaluation under the Minus
/// dynamics with exp(int |u|^2 dt) weights, update u <- sigma^T grad Q_hat / (2 Q_hat),
/// stopping with DivergedControlCap when the unclipped sup-norm over the eval
/// points exceeds control_cap.
ApiResult api_run_quad(const ApiConfig& config, const SdeModel& model, const StopDomain& domain);

struct MonotonicityReport {
    std::vector<double> per_point;   // fraction of iteration pairs with J_{k+1} <= J_k + 3 se
    double aggregate = 0.0;
    bool defined = false;            // false when the trace has < 2 iterations
};

MonotonicityReport monotonicity_report(const ApiTrace& trace);

/// One row per (iteration, eval point): cost, std error, control norm,
/// censored fraction.
void write_trace_csv(const ApiTrace& trace, std::ostream& os);

} // namespace zvis
