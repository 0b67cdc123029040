#include "zvis/benchmarks.hpp"

#include <cmath>

namespace zvis {

ShellProblem::ShellProblem(int dim_, double r1_, double r2_, double sigma_)
    : dim(dim_), r1(r1_), r2(r2_), sigma(sigma_) {
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "ShellProblem: dim must be >= 1");
    if (!(r1 > 0.0) || !(r2 > r1))
        throw Error(ErrorCode::InvalidArgument, "ShellProblem: need 0 < R1 < R2");
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "ShellProblem: sigma must be > 0");
}

SdeModel ShellProblem::model() const { return SdeModel::brownian(dim, sigma); }

StopDomain ShellProblem::domain() const { return StopDomain::spherical_shell(r1, r2); }

double ShellProblem::committor(double r) const {
    if (r < r1 || r > r2)
        throw Error(ErrorCode::DomainError, "shell committor: r outside [R1, R2]");
    if (dim == 2) return (std::log(r) - std::log(r1)) / (std::log(r2) - std::log(r1));
    const double p = 2.0 - static_cast<double>(dim);
    return (std::pow(r, p) - std::pow(r1, p)) / (std::pow(r2, p) - std::pow(r1, p));
}

double ShellProblem::committor_deriv(double r) const {
    if (r < r1 || r > r2)
        throw Error(ErrorCode::DomainError, "shell committor: r outside [R1, R2]");
    if (dim == 2) return 1.0 / (r * (std::log(r2) - std::log(r1)));
    const double p = 2.0 - static_cast<double>(dim);
    return p * std::pow(r, p - 1.0) / (std::pow(r2, p) - std::pow(r1, p));
}

State ShellProblem::optimal_control(const State& x, double eps) const {
    const double r = x.norm();
    if (!(r > r1) || !(r < r2))
        throw Error(ErrorCode::DomainError, "shell optimal control: |x| outside (R1, R2)");
    const double psi = committor(r) + eps;
    if (!(psi > 0.0))
        throw Error(ErrorCode::SingularPoint, "shell optimal control: committor vanishes");
    return (sigma * committor_deriv(r) / psi / r) * x;
}

FeedbackPolicy ShellProblem::optimal_policy(double eps) const {
    FeedbackPolicy p;
    p.control = [problem = *this, eps](const State& x, Eigen::Ref<Eigen::VectorXd> u) {
        u = problem.optimal_control(x, eps);
    };
    return p;
}

SdeModel DoubleWellProblem::model() const {
    return SdeModel::gradient_drift(
        1, [](const State& x) { return potential(x[0]); },
        [](const State& x, Eigen::Ref<State> out) { out[0] = potential_deriv(x[0]); }, beta);
}

StopDomain DoubleWellProblem::domain() const { return StopDomain::symmetric_wells(barrier_pos); }

double DoubleWellProblem::committor(double x, long grid_points) const {
    if (grid_points < 10)
        throw Error(ErrorCode::InvalidArgument, "double-well committor: grid too coarse");
    const double a = -barrier_pos, b = barrier_pos;
    if (x < a || x > b)
        throw Error(ErrorCode::DomainError, "double-well committor: x outside the domain");
    // phi'(s) is proportional to exp(beta V(s)); trapezoid quadrature of the ratio.
    const double h = (b - a) / static_cast<double>(grid_points - 1);
    double total = 0.0, partial = 0.0;
    double prev = std::exp(beta * potential(a));
    for (long i = 1; i < grid_points; ++i) {
        const double s = a + h * static_cast<double>(i);
        const double cur = std::exp(beta * potential(s));
        const double cell = 0.5 * (prev + cur) * h;
        total += cell;
        const double s_prev = s - h;
        if (s <= x) {
            partial += cell;
        } else if (s_prev < x) {
            // fractional cell up to x
            const double f = (x - s_prev) / h;
            const double mid = std::exp(beta * potential(x));
            partial += 0.5 * (prev + mid) * (f * h);
        }
        prev = cur;
    }
    return partial / total;
}

double DoubleWellProblem::biased_potential(double x, Formulation form, long grid_points) const {
    const double phi_eps = committor(x, grid_points) + epsilon_reg;
    if (!(phi_eps > 0.0))
        throw Error(ErrorCode::DomainError, "biased potential: regularized committor not positive");
    const double bias = (2.0 / beta) * std::log(phi_eps);
    return form == Formulation::Log ? potential(x) - bias : potential(x) + bias;
}

double bm_interval_mfet_exact(double a, double b, double x, double sigma) {
    if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "bm_interval_mfet_exact: need a < b");
    if (!(sigma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "bm_interval_mfet_exact: sigma must be > 0");
    if (x < a || x > b)
        throw Error(ErrorCode::DomainError, "bm_interval_mfet_exact: x outside [a, b]");
    return (x - a) * (b - x) / (sigma * sigma);
}

} // namespace zvis
