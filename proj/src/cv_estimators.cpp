#include "zvis/cv_estimators.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "zvis/stats.hpp"

namespace zvis {

namespace {

Eigen::MatrixXd tridiagonal_coupling(int dim) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        A(i, i) = 2.0;
        if (i + 1 < dim) {
            A(i, i + 1) = -1.0;
            A(i + 1, i) = -1.0;
        }
    }
    return A;
}

} // namespace

OuModel::OuModel(int dim_, double beta_, double radius_)
    : OuModel(tridiagonal_coupling(dim_), beta_, radius_) {}

OuModel::OuModel(Eigen::MatrixXd A, double beta_, double radius_)
    : dim(static_cast<int>(A.rows())), beta(beta_), radius(radius_), coupling(std::move(A)) {
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "OuModel: dim must be >= 1");
    if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "OuModel: beta must be > 0");
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "OuModel: radius must be > 0");
    if (!coupling.isApprox(coupling.transpose()))
        throw Error(ErrorCode::InvalidArgument, "OuModel: coupling matrix must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(coupling);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::InvalidArgument, "OuModel: coupling matrix not positive definite");
}

SdeModel OuModel::model() const { return SdeModel::linear_drift(coupling, beta); }

StopDomain OuModel::domain() const { return StopDomain::ball(radius); }

ControlVariateSpec OuModel::approximate_mfet_cv() const {
    const double scale = beta / (2.0 * static_cast<double>(dim));
    ControlVariateSpec spec;
    spec.phi = [R2 = radius * radius, scale](const State& x) {
        return scale * (R2 - x.squaredNorm());
    };
    spec.grad_phi = [scale](const State& x, Eigen::Ref<State> out) { out = -2.0 * scale * x; };
    return spec;
}

CvResult mfet_control_variate(const SdeModel& model, const StopDomain& domain,
                              const ControlVariateSpec& spec, const State& x0,
                              const McParams& mc) {
    SimOptions opts;
    opts.martingale_grad = spec.grad_phi;
    const auto paths = sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus, x0,
                                    mc.dt, mc.max_steps, mc.n_paths, mc.seed, opts, mc.threads);

    std::vector<double> crude, cv;
    crude.reserve(paths.size());
    cv.reserve(paths.size());
    long censored = 0;
    for (const auto& p : paths) {
        if (!p.exited()) {
            ++censored;
            continue;
        }
        crude.push_back(p.tau);
        // tau - int sigma^T grad Phi . dB is the variance-annihilating pairing
        cv.push_back(p.tau - p.martingale);
    }
    if (crude.empty())
        throw Error(ErrorCode::NoValidSamples, "mfet_control_variate: all paths censored");

    const SampleStats s_crude = sample_stats(crude);
    const SampleStats s_cv = sample_stats(cv);
    CvResult out;
    out.estimate = s_cv.mean;
    out.std_error = s_cv.std_error();
    out.crude_estimate = s_crude.mean;
    out.crude_std_error = s_crude.std_error();
    out.cv_variance = s_cv.variance;
    out.crude_variance = s_crude.variance;
    out.n_used = s_cv.n;
    out.censored_fraction = static_cast<double>(censored) / static_cast<double>(paths.size());
    out.excess_censoring = out.censored_fraction > mc.censor_warn;
    return out;
}

namespace {

McEstimate mgf_from_paths(const std::vector<StoppedPath>& paths, double lambda,
                          double censor_warn) {
    if (!(lambda > 0.0))
        throw Error(ErrorCode::InvalidArgument, "mgf_tau_estimate: lambda must be > 0");
    double sum = 0.0, sum_sq = 0.0;
    long n = 0, censored = 0;
    for (const auto& p : paths) {
        if (!p.exited()) {
            ++censored;
            continue;
        }
        // e^{-lambda tau} reweighted back to the uncontrolled measure
        const double v = std::exp(-lambda * p.tau - p.log_lr);
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::NoValidSamples, "mgf_tau_estimate: all paths censored");
    const double mean = sum / static_cast<double>(n);
    if (!(mean > 0.0))
        throw Error(ErrorCode::DegenerateEstimate, "mgf_tau_estimate: batch mean not positive");
    double se_mean = 0.0;
    if (n > 1) {
        const double var =
            (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
        se_mean = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    }
    McEstimate est;
    est.estimate = -std::log(mean) / lambda;
    est.std_error = se_mean / (lambda * mean);  // delta method through -log/lambda
    est.n_used = n;
    est.censored_fraction = static_cast<double>(censored) / static_cast<double>(paths.size());
    est.excess_censoring = est.censored_fraction > censor_warn;
    return est;
}

} // namespace

McEstimate mgf_tau_estimate(const SdeModel& model, const StopDomain& domain,
                            const FeedbackPolicy& policy, const State& x0, double lambda,
                            const McParams& mc) {
    const auto paths = sample_batch(model, domain, policy, ControlSign::Plus, x0, mc.dt,
                                    mc.max_steps, mc.n_paths, mc.seed, {}, mc.threads);
    return mgf_from_paths(paths, lambda, mc.censor_warn);
}

MgfSweepResult mgf_tau_sweep(const SdeModel& model, const StopDomain& domain, const State& x0,
                             std::span<const double> lambdas, const McParams& mc) {
    const auto paths = sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus, x0,
                                    mc.dt, mc.max_steps, mc.n_paths, mc.seed, {}, mc.threads);
    MgfSweepResult result;
    for (double lambda : lambdas) {
        result.lambdas.push_back(lambda);
        result.estimates.push_back(mgf_from_paths(paths, lambda, mc.censor_warn));
    }
    std::vector<double> taus;
    long censored = 0;
    for (const auto& p : paths) {
        if (p.exited())
            taus.push_back(p.tau);
        else
            ++censored;
    }
    if (taus.empty()) throw Error(ErrorCode::NoValidSamples, "mgf_tau_sweep: all paths censored");
    const SampleStats s = sample_stats(taus);
    result.mfet.estimate = s.mean;
    result.mfet.std_error = s.std_error();
    result.mfet.n_used = s.n;
    result.mfet.censored_fraction =
        static_cast<double>(censored) / static_cast<double>(paths.size());
    result.mfet.excess_censoring = result.mfet.censored_fraction > mc.censor_warn;
    return result;
}

} // namespace zvis
