#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "zvis/errors.hpp"
#include "zvis/policy.hpp"

namespace zvis {

enum class RbfKind { Gaussian, InverseQuadratic, InverseMultiquadric };

const char* rbf_kind_name(RbfKind kind);
RbfKind rbf_kind_from_name(const std::string& name);

/// Default kernel width per kind, tuned for unit-spaced centers.
double default_rbf_width(RbfKind kind);

/// One-dimensional radial basis: strictly positive kernels phi_l(r)
/// centered at mu_l with shared width eps.
struct RbfBasis {
    RbfKind kind = RbfKind::Gaussian;
    std::vector<double> centers;
    double width = 0.25;

    int size() const { return static_cast<int>(centers.size()); }

    double kernel(double r, double center) const;
    double kernel_deriv(double r, double center) const;

    void values(double r, Eigen::Ref<Eigen::VectorXd> out) const;
    void derivatives(double r, Eigen::Ref<Eigen::VectorXd> out) const;

    static std::vector<double> linspace(double lo, double hi, int n);
};

/// Parameter-linear function theta^T phi(r(x)); r(x) = |x| when radialized
/// (dim > 1), the coordinate itself in 1D.
struct ParametricFunction {
    RbfBasis basis;
    Eigen::VectorXd theta;
    bool radialize = true;

    double value_r(double r) const;
    double deriv_r(double r) const;

    double value(const State& x) const;
    /// Analytic gradient, chain-ruled through r(x) = |x|.
    void gradient(const State& x, Eigen::Ref<State> out) const;

    /// Flat text record (kind, width, radialize, centers, theta).
    std::string to_record() const;
    static ParametricFunction from_record(const std::string& record);
};

/// Least-squares fit of theta minimizing sum |y_i - theta^T phi(r_i)|^2,
/// via normal equations with a 1e-10 ridge fallback on singular Gram matrices.
ParametricFunction fit_least_squares(const RbfBasis& basis, std::span<const double> rs,
                                     std::span<const double> ys, bool radialize = true);

ParametricFunction fit_least_squares(const RbfBasis& basis, const std::vector<State>& xs,
                                     std::span<const double> ys);

} // namespace zvis
