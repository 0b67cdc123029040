#pragma once

#include "zvis/policy_iteration.hpp"
#include "zvis/sde_engine.hpp"

namespace zvis {

/// Brownian motion between concentric spheres R1 < |x| < R2; the committor
/// between the inner and outer boundary has a closed form in every dimension.
struct ShellProblem {
    int dim = 2;
    double r1 = 5.0;
    double r2 = 10.0;
    double sigma = 1.0;

    ShellProblem(int dim_, double r1_, double r2_, double sigma_ = 1.0);

    SdeModel model() const;
    StopDomain domain() const;

    /// P(hit outer before inner | start radius r); DomainError outside [R1, R2].
    double committor(double r) const;
    double committor_deriv(double r) const;

    /// sigma * (x/|x|) * Psi'(r) / (Psi(r) + eps) at r = |x|;
    /// SingularPoint when the (regularized) committor vanishes.
    State optimal_control(const State& x, double eps = 0.0) const;

    /// Analytic optimal feedback policy built from the regularized committor.
    FeedbackPolicy optimal_policy(double eps = 0.0) const;
};

/// 1D gradient diffusion in V(x) = (x^2-1)^2 / 2 between absorbing
/// boundaries at -barrier_pos (set A) and +barrier_pos (set B).
struct DoubleWellProblem {
    double beta = 4.0;
    double barrier_pos = 1.5;
    double epsilon_reg = 0.1;

    static double potential(double x) { return 0.5 * (x * x - 1.0) * (x * x - 1.0); }
    static double potential_deriv(double x) { return 2.0 * x * (x * x - 1.0); }

    SdeModel model() const;
    StopDomain domain() const;

    /// Committor by dense trapezoid quadrature of the reversible closed form
    /// phi(x) = int_a^x exp(beta V) / int_a^b exp(beta V); InvalidArgument for
    /// fewer than 10 grid points.
    double committor(double x, long grid_points = 100000) const;

    /// Potential of the optimally controlled dynamics: Log form gives
    /// V - 2/beta log(phi + eps), Quad form V + 2/beta log(phi + eps).
    double biased_potential(double x, Formulation form, long grid_points = 100000) const;
};

/// E[first exit time] of dX = sigma dB from (a, b) started at x.
double bm_interval_mfet_exact(double a, double b, double x, double sigma);

} // namespace zvis
