#pragma once

#include <span>
#include <vector>

#include "zvis/soc_costs.hpp"

namespace zvis {

/// Candidate solution of the linear exit-time problem, used as the
/// control-variate integrand.
struct ControlVariateSpec {
    ScalarFn phi;
    GradFn grad_phi;
};

/// Reversible Ornstein-Uhlenbeck model dX = -A X dt + sqrt(2/beta) dB with
/// tridiagonal coupling, exiting from {|x| < R}.
struct OuModel {
    int dim = 10;
    double beta = 10.0;
    double radius = 1.2;
    Eigen::MatrixXd coupling;

    /// Builds the (2, -1) tridiagonal coupling; Cholesky-checks positive
    /// definiteness.
    OuModel(int dim_, double beta_, double radius_);
    OuModel(Eigen::MatrixXd A, double beta_, double radius_);

    SdeModel model() const;
    StopDomain domain() const;

    /// Spherical large-d approximation of the mean first exit time,
    /// Phi(x) = (R^2 - |x|^2) / (2 beta^{-1} dim).
    ControlVariateSpec approximate_mfet_cv() const;
};

struct CvResult {
    double estimate = 0.0;        // control-variate estimate of E[tau]
    double std_error = 0.0;
    double crude_estimate = 0.0;  // plain mean of tau from the same paths
    double crude_std_error = 0.0;
    double cv_variance = 0.0;     // sample variance of the paired payoffs
    double crude_variance = 0.0;
    long n_used = 0;
    double censored_fraction = 0.0;
    bool excess_censoring = false;
};

/// Mean-first-exit-time estimator with the martingale control variate: per
/// path the payoff is tau - int (sigma^T grad Phi)(X_t) . dB_t, accumulated
/// with the same Brownian increments as the state update. Crude and CV
/// estimates come from the same paths (paired comparison).
CvResult mfet_control_variate(const SdeModel& model, const StopDomain& domain,
                              const ControlVariateSpec& spec, const State& x0,
                              const McParams& mc);

/// -1/lambda log E[exp(-lambda tau)], by plain Monte Carlo for the zero
/// policy and by likelihood-ratio reweighting otherwise; the log is applied
/// to the batch mean, with a delta-method standard error.
McEstimate mgf_tau_estimate(const SdeModel& model, const StopDomain& domain,
                            const FeedbackPolicy& policy, const State& x0,
                            double lambda, const McParams& mc);

struct MgfSweepResult {
    std::vector<double> lambdas;
    std::vector<McEstimate> estimates;
    McEstimate mfet;   // plain mean of tau from the same batch
};

/// Evaluates the scaled log-MGF on a lambda grid from one shared batch of
/// uncontrolled paths, so the Jensen ordering across lambdas is exact.
MgfSweepResult mgf_tau_sweep(const SdeModel& model, const StopDomain& domain, const State& x0,
                             std::span<const double> lambdas, const McParams& mc);

} // namespace zvis
