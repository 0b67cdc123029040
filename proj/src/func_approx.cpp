#include "zvis/func_approx.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace zvis {

const char* rbf_kind_name(RbfKind kind) {
    switch (kind) {
        case RbfKind::Gaussian: return "gaussian";
        case RbfKind::InverseQuadratic: return "inverse_quadratic";
        case RbfKind::InverseMultiquadric: return "inverse_multiquadric";
    }
    return "unknown";
}

RbfKind rbf_kind_from_name(const std::string& name) {
    if (name == "gaussian") return RbfKind::Gaussian;
    if (name == "inverse_quadratic") return RbfKind::InverseQuadratic;
    if (name == "inverse_multiquadric") return RbfKind::InverseMultiquadric;
    throw Error(ErrorCode::InvalidArgument, "unknown RBF kind: " + name);
}

double default_rbf_width(RbfKind kind) {
    switch (kind) {
        case RbfKind::Gaussian: return 0.25;
        case RbfKind::InverseQuadratic: return 0.05;
        case RbfKind::InverseMultiquadric: return 0.1;
    }
    return 0.25;
}

double RbfBasis::kernel(double r, double center) const {
    const double s = r - center;
    const double q = width * width * s * s;
    switch (kind) {
        case RbfKind::Gaussian: return std::exp(-q);
        case RbfKind::InverseQuadratic: return 1.0 / (1.0 + q);
        case RbfKind::InverseMultiquadric: return 1.0 / std::sqrt(1.0 + q);
    }
    return 0.0;
}

double RbfBasis::kernel_deriv(double r, double center) const {
    const double s = r - center;
    const double e2 = width * width;
    const double q = e2 * s * s;
    switch (kind) {
        case RbfKind::Gaussian: return -2.0 * e2 * s * std::exp(-q);
        case RbfKind::InverseQuadratic: {
            const double d = 1.0 + q;
            return -2.0 * e2 * s / (d * d);
        }
        case RbfKind::InverseMultiquadric: {
            const double d = 1.0 + q;
            return -e2 * s / (d * std::sqrt(d));
        }
    }
    return 0.0;
}

void RbfBasis::values(double r, Eigen::Ref<Eigen::VectorXd> out) const {
    for (int l = 0; l < size(); ++l) out[l] = kernel(r, centers[static_cast<size_t>(l)]);
}

void RbfBasis::derivatives(double r, Eigen::Ref<Eigen::VectorXd> out) const {
    for (int l = 0; l < size(); ++l) out[l] = kernel_deriv(r, centers[static_cast<size_t>(l)]);
}

std::vector<double> RbfBasis::linspace(double lo, double hi, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "linspace requires n >= 1");
    std::vector<double> v(static_cast<size_t>(n));
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = lo + h * static_cast<double>(i);
    return v;
}

double ParametricFunction::value_r(double r) const {
    double acc = 0.0;
    for (int l = 0; l < basis.size(); ++l)
        acc += theta[l] * basis.kernel(r, basis.centers[static_cast<size_t>(l)]);
    return acc;
}

double ParametricFunction::deriv_r(double r) const {
    double acc = 0.0;
    for (int l = 0; l < basis.size(); ++l)
        acc += theta[l] * basis.kernel_deriv(r, basis.centers[static_cast<size_t>(l)]);
    return acc;
}

double ParametricFunction::value(const State& x) const {
    const double r = (radialize && x.size() > 1) ? x.norm() : x[0];
    return value_r(r);
}

void ParametricFunction::gradient(const State& x, Eigen::Ref<State> out) const {
    if (x.size() == 1 || !radialize) {
        out.setZero();
        out[0] = deriv_r(x[0]);
        return;
    }
    const double r = x.norm();
    if (r == 0.0)
        throw Error(ErrorCode::SingularPoint, "radial gradient undefined at the origin");
    out = (deriv_r(r) / r) * x;
}

std::string ParametricFunction::to_record() const {
    std::ostringstream os;
    os.precision(17);
    os << "kind = " << rbf_kind_name(basis.kind) << '\n';
    os << "width = " << basis.width << '\n';
    os << "radialize = " << (radialize ? 1 : 0) << '\n';
    os << "centers =";
    for (double c : basis.centers) os << ' ' << c;
    os << '\n';
    os << "theta =";
    for (Eigen::Index i = 0; i < theta.size(); ++i) os << ' ' << theta[i];
    os << '\n';
    return os.str();
}

ParametricFunction ParametricFunction::from_record(const std::string& record) {
    ParametricFunction f;
    std::istringstream is(record);
    std::string line;
    bool have_kind = false, have_width = false, have_centers = false, have_theta = false;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::istringstream rest(line.substr(eq + 1));
        if (key == "kind") {
            std::string name;
            rest >> name;
            f.basis.kind = rbf_kind_from_name(name);
            have_kind = true;
        } else if (key == "width") {
            rest >> f.basis.width;
            have_width = true;
        } else if (key == "radialize") {
            int v = 1;
            rest >> v;
            f.radialize = v != 0;
        } else if (key == "centers") {
            f.basis.centers.clear();
            double v;
            while (rest >> v) f.basis.centers.push_back(v);
            have_centers = true;
        } else if (key == "theta") {
            std::vector<double> v;
            double t;
            while (rest >> t) v.push_back(t);
            f.theta = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
            have_theta = true;
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown field in function record: " + key);
        }
    }
    if (!have_kind || !have_width || !have_centers || !have_theta)
        throw Error(ErrorCode::InvalidArgument, "incomplete function record");
    if (f.theta.size() != f.basis.size())
        throw Error(ErrorCode::InvalidArgument, "function record: |theta| != |centers|");
    return f;
}

ParametricFunction fit_least_squares(const RbfBasis& basis, std::span<const double> rs,
                                     std::span<const double> ys, bool radialize) {
    const long n = static_cast<long>(rs.size());
    if (n < 1 || ys.size() != rs.size())
        throw Error(ErrorCode::InvalidArgument, "fit_least_squares: need N >= 1 matching samples");
    const int L = basis.size();
    if (L < 1) throw Error(ErrorCode::InvalidArgument, "fit_least_squares: empty basis");

    Eigen::MatrixXd design(n, L);
    Eigen::VectorXd y(n);
    Eigen::VectorXd phi_row(L);
    for (long i = 0; i < n; ++i) {
        basis.values(rs[static_cast<size_t>(i)], phi_row);
        design.row(i) = phi_row.transpose();
        y[i] = ys[static_cast<size_t>(i)];
    }

    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::VectorXd rhs = design.transpose() * y;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::VectorXd theta;
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        theta = ldlt.solve(rhs);
        const double residual = (gram * theta - rhs).norm();
        ok = theta.allFinite() && residual <= 1e-8 * (rhs.norm() + 1.0);
    }
    if (!ok) {
        // Gram matrix numerically singular: tiny ridge.
        Eigen::MatrixXd ridged = gram;
        ridged.diagonal().array() += 1e-10;
        theta = Eigen::LDLT<Eigen::MatrixXd>(ridged).solve(rhs);
    }

    ParametricFunction f;
    f.basis = basis;
    f.theta = theta;
    f.radialize = radialize;
    return f;
}

ParametricFunction fit_least_squares(const RbfBasis& basis, const std::vector<State>& xs,
                                     std::span<const double> ys) {
    std::vector<double> rs(xs.size());
    for (size_t i = 0; i < xs.size(); ++i)
        rs[i] = xs[i].size() > 1 ? xs[i].norm() : xs[i][0];
    return fit_least_squares(basis, rs, ys, true);
}

} // namespace zvis
