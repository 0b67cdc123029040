#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "zvis/benchmarks.hpp"
#include "zvis/cv_estimators.hpp"
#include "zvis/func_approx.hpp"
#include "zvis/rng.hpp"
#include "zvis/sde_engine.hpp"
#include "zvis/stats.hpp"

using namespace zvis;

namespace {

bool paths_identical(const StoppedPath& a, const StoppedPath& b) {
    return a.exit == b.exit && a.tau == b.tau && a.n_steps == b.n_steps &&
           a.run_cost_f == b.run_cost_f && a.run_cost_u2 == b.run_cost_u2 &&
           a.log_lr == b.log_lr && a.martingale == b.martingale &&
           a.x_final.size() == b.x_final.size() && a.x_final == b.x_final;
}

State state1(double x) {
    State s(1);
    s[0] = x;
    return s;
}

FeedbackPolicy radial_push(double magnitude) {
    FeedbackPolicy p;
    p.control = [magnitude](const State& x, Eigen::Ref<Eigen::VectorXd> u) {
        const double r = x.norm();
        u = (magnitude / r) * x;
    };
    p.bound = magnitude;
    return p;
}

} // namespace

TEST_CASE("counter rng: reproducible and well normalized") {
    double a0, a1, b0, b1;
    normal_pair(123, 456, a0, a1);
    normal_pair(123, 456, b0, b1);
    CHECK(a0 == b0);
    CHECK(a1 == b1);
    CHECK(derive_seed(7, 1) != derive_seed(7, 2));
    CHECK(derive_seed(7, 1) == derive_seed(7, 1));

    GaussianStream g(99, 0);
    const long n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < n; ++i) {
        const double z = g.scalar(static_cast<std::uint64_t>(i));
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("1d brownian exit time approaches the closed form as dt shrinks") {
    const SdeModel model = SdeModel::brownian(1, 1.0);
    const StopDomain domain = StopDomain::interval(-1.0, 1.0);
    const double exact = bm_interval_mfet_exact(-1.0, 1.0, 0.0, 1.0);
    CHECK(exact == 1.0);

    double err_coarse = 0.0, err_fine = 0.0;
    for (const double dt : {4e-3, 5e-4}) {
        const auto paths = sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                        state1(0.0), dt, 400000, 2500, 42);
        std::vector<double> taus;
        for (const auto& p : paths) {
            REQUIRE(p.exited());
            taus.push_back(p.tau);
        }
        const SampleStats s = sample_stats(taus);
        (dt == 4e-3 ? err_coarse : err_fine) = std::fabs(s.mean - exact);
    }
    CHECK(err_fine < err_coarse + 0.01);
    CHECK(err_fine < 0.08);
}

TEST_CASE("zero policy accumulates exactly zero likelihood") {
    const SdeModel model = SdeModel::brownian(2, 1.0);
    const StopDomain domain = StopDomain::spherical_shell(5.0, 10.0);
    State x0(2);
    x0 << 7.5, 0.0;
    const auto paths = sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus, x0,
                                    0.01, 200000, 50, 7);
    for (const auto& p : paths) {
        CHECK(p.log_lr == 0.0);
        CHECK(p.run_cost_u2 == 0.0);
        CHECK(p.tau == static_cast<double>(p.n_steps) * 0.01);
    }
}

TEST_CASE("censoring flag set exactly at the step cap") {
    const SdeModel model = SdeModel::brownian(1, 1.0);
    const StopDomain domain = StopDomain::interval(-1.0, 1.0);
    const auto p = simulate_until_exit(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                       state1(0.0), 1e-6, 10, 3);
    CHECK(p.exit == ExitFlag::Censored);
    CHECK(p.n_steps == 10);
    CHECK(p.tau == 10 * 1e-6);
    CHECK(domain.classify(p.x_final) == Region::Interior);
}

TEST_CASE("non-censored paths stop at the first boundary classification") {
    const ShellProblem shell(2, 5.0, 10.0);
    const StopDomain domain = shell.domain();
    for (int i = 0; i < 30; ++i) {
        const auto rec = simulate_recorded(shell.model(), domain, FeedbackPolicy::zero(),
                                           ControlSign::Plus, sphere_point(2, 7.5, 1000 + i),
                                           0.01, 200000, 1000 + i);
        REQUIRE(rec.path.exited());
        REQUIRE(rec.states.size() >= 2);
        CHECK(domain.classify(rec.states[rec.states.size() - 2]) == Region::Interior);
        CHECK(domain.classify(rec.states.back()) != Region::Interior);
        CHECK(rec.states.back() == rec.path.x_final);
    }
}

TEST_CASE("shell hit fraction matches the closed-form committor") {
    const ShellProblem shell(2, 5.0, 10.0);
    const auto paths = sample_batch(shell.model(), shell.domain(), FeedbackPolicy::zero(),
                                    ControlSign::Plus, sphere_point(2, 7.5, 5), 0.005, 400000,
                                    10000, 9001);
    long hits = 0;
    for (const auto& p : paths) {
        REQUIRE(p.exited());
        if (p.exit == ExitFlag::HitB) ++hits;
    }
    const double frac = static_cast<double>(hits) / 10000.0;
    const double psi = shell.committor(7.5);
    const double se = std::sqrt(psi * (1.0 - psi) / 10000.0);
    CHECK(std::fabs(frac - psi) < 3.0 * se + 0.015);
}

TEST_CASE("batch determinism: single path, reruns, and thread counts") {
    const ShellProblem shell(3, 5.0, 10.0);
    State x0 = sphere_point(3, 7.0, 99);
    const FeedbackPolicy policy = radial_push(0.2);

    const auto one = sample_batch(shell.model(), shell.domain(), policy, ControlSign::Plus, x0,
                                  0.01, 100000, 1, 555);
    const auto direct = simulate_until_exit(shell.model(), shell.domain(), policy,
                                            ControlSign::Plus, x0, 0.01, 100000,
                                            derive_seed(555, 0));
    CHECK(paths_identical(one[0], direct));

    const auto a = sample_batch(shell.model(), shell.domain(), policy, ControlSign::Plus, x0,
                                0.01, 100000, 64, 555, {}, 1);
    const auto b = sample_batch(shell.model(), shell.domain(), policy, ControlSign::Plus, x0,
                                0.01, 100000, 64, 555, {}, 2);
    const auto c = sample_batch(shell.model(), shell.domain(), policy, ControlSign::Plus, x0,
                                0.01, 100000, 64, 555, {}, 4);
    const auto d = sample_batch(shell.model(), shell.domain(), policy, ControlSign::Plus, x0,
                                0.01, 100000, 64, 555, {}, 2);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(paths_identical(a[i], b[i]));
        CHECK(paths_identical(a[i], c[i]));
        CHECK(paths_identical(b[i], d[i]));
    }
}

TEST_CASE("numerical blowup: thrown by single paths, flagged in batches") {
    // stiff cubic drift overflows to inf after a few steps at this step size
    SdeModel model;
    model.dim = 1;
    model.noise_dim = 1;
    model.sigma_scalar = 1.0;
    model.drift = [](const State& x, Eigen::Ref<State> out) { out[0] = x[0] * x[0] * x[0]; };
    const StopDomain domain = StopDomain::interval(-1.79e308, 1.79e308);

    CHECK_THROWS_WITH_AS(simulate_until_exit(model, domain, FeedbackPolicy::zero(),
                                             ControlSign::Plus, state1(2.5), 1.0, 1000, 1),
                         doctest::Contains("non-finite state"), Error);
    try {
        simulate_until_exit(model, domain, FeedbackPolicy::zero(), ControlSign::Plus, state1(2.5),
                            1.0, 1000, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NumericalBlowup);
        CHECK(e.index() >= 0);
    }

    const auto paths = sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                    state1(2.5), 1.0, 1000, 8, 77);
    for (const auto& p : paths) {
        CHECK(p.exit == ExitFlag::Blowup);
        CHECK(p.blowup_step >= 0);
    }
}

TEST_CASE("argument validation in the integrator") {
    const SdeModel model = SdeModel::brownian(1, 1.0);
    const StopDomain domain = StopDomain::interval(-1.0, 1.0);
    CHECK_THROWS_AS(simulate_until_exit(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                        state1(0.0), -0.1, 10, 1),
                    Error);
    CHECK_THROWS_AS(simulate_until_exit(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                        state1(2.0), 0.1, 10, 1),
                    Error);
    CHECK_THROWS_AS(simulate_until_exit(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                        state1(0.0), 0.1, 0, 1),
                    Error);
    CHECK_THROWS_AS(sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                 state1(0.0), 0.1, 10, 0, 1),
                    Error);
}

TEST_CASE("reweighting: unit mass, censored-only failure, girsanov consistency") {
    const ShellProblem shell(2, 5.0, 10.0);
    const State x0 = sphere_point(2, 7.5, 31);
    const FeedbackPolicy push = radial_push(0.25);

    const auto controlled = sample_batch(shell.model(), shell.domain(), push, ControlSign::Plus,
                                         x0, 0.005, 400000, 4000, 2024);
    const auto plain = sample_batch(shell.model(), shell.domain(), FeedbackPolicy::zero(),
                                    ControlSign::Plus, x0, 0.005, 400000, 4000, 4048);

    const auto ones = reweighted_expectation(
        controlled, [](const StoppedPath&) { return 1.0; });
    CHECK(std::fabs(ones.estimate - 1.0) < 3.0 * ones.std_error);

    const auto hit_b = [](const StoppedPath& p) { return p.exit == ExitFlag::HitB ? 1.0 : 0.0; };
    const auto reweighted = reweighted_expectation(controlled, hit_b);
    const auto unweighted = reweighted_expectation(plain, hit_b);
    const double se = std::hypot(reweighted.std_error, unweighted.std_error);
    CHECK(std::fabs(reweighted.estimate - unweighted.estimate) < 3.0 * se);

    // under the zero policy the weights are identically one
    double plain_mean = 0.0;
    for (const auto& p : plain) plain_mean += hit_b(p);
    plain_mean /= static_cast<double>(plain.size());
    CHECK(unweighted.estimate == plain_mean);

    const auto censored = sample_batch(shell.model(), shell.domain(), FeedbackPolicy::zero(),
                                       ControlSign::Plus, x0, 1e-6, 5, 10, 3);
    CHECK_THROWS_AS(reweighted_expectation(censored, hit_b), Error);
}

TEST_CASE("gradient drift constructor matches finite differences of the potential") {
    const DoubleWellProblem dw;
    const SdeModel model = dw.model();
    REQUIRE(model.potential);
    const double h = 1e-6;
    for (const double x : {-1.4, -0.7, 0.0, 0.3, 1.2}) {
        State b(1);
        model.drift(state1(x), b);
        const double fd =
            (model.potential(state1(x + h)) - model.potential(state1(x - h))) / (2.0 * h);
        CHECK(b[0] == doctest::Approx(-fd).epsilon(1e-5));
    }
    CHECK(*model.sigma_scalar == doctest::Approx(std::sqrt(2.0 / dw.beta)));
}

// ---------------------------------------------------------------------------
// func_approx
// ---------------------------------------------------------------------------

TEST_CASE("rbf evaluation basics") {
    RbfBasis basis;
    basis.kind = RbfKind::Gaussian;
    basis.centers = {5.0, 10.0};
    basis.width = 0.25;

    ParametricFunction f;
    f.basis = basis;
    f.theta = Eigen::Vector2d(1.0, 0.0);
    CHECK(f.value_r(5.0) == 1.0);

    f.theta = Eigen::Vector2d(0.0, 0.0);
    CHECK(f.value_r(7.3) == 0.0);

    f.theta = Eigen::Vector2d(1.0, 1.0);
    CHECK(f.value_r(7.5) == doctest::Approx(2.0 * std::exp(-0.390625)).epsilon(1e-14));

    // critical point of the one-hot kernel at its own center
    f.theta = Eigen::Vector2d(1.0, 0.0);
    CHECK(f.deriv_r(5.0) == 0.0);
}

TEST_CASE("rbf positivity across kinds") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ur(-5.0, 20.0);
    for (const RbfKind kind :
         {RbfKind::Gaussian, RbfKind::InverseQuadratic, RbfKind::InverseMultiquadric}) {
        RbfBasis basis;
        basis.kind = kind;
        basis.centers = RbfBasis::linspace(5.0, 10.0, 11);
        basis.width = default_rbf_width(kind);
        Eigen::VectorXd phi(basis.size());
        for (int i = 0; i < 100; ++i) {
            basis.values(ur(gen), phi);
            CHECK(phi.minCoeff() > 0.0);
        }
    }
}

TEST_CASE("rbf gradient matches central finite differences") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> ur(4.0, 11.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double h = 1e-5;

    for (const RbfKind kind :
         {RbfKind::Gaussian, RbfKind::InverseQuadratic, RbfKind::InverseMultiquadric}) {
        RbfBasis basis;
        basis.kind = kind;
        basis.centers = RbfBasis::linspace(5.0, 10.0, 11);
        basis.width = default_rbf_width(kind);

        ParametricFunction f;
        f.basis = basis;
        f.theta = Eigen::VectorXd::NullaryExpr(11, [&](Eigen::Index) { return nd(gen); });

        for (int i = 0; i < 100; ++i) {
            // random direction in R^3 at a random radius
            State x(3);
            for (int j = 0; j < 3; ++j) x[j] = nd(gen);
            x *= ur(gen) / x.norm();

            State grad(3);
            f.gradient(x, grad);
            for (int j = 0; j < 3; ++j) {
                State xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                const double fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
                const double scale = std::max(std::fabs(fd), 1e-8);
                CHECK(std::fabs(grad[j] - fd) / scale < 1e-4);
            }
        }
    }
}

TEST_CASE("zero parameters give a zero gradient; origin is singular") {
    ParametricFunction f;
    f.basis.centers = {1.0, 2.0};
    f.basis.width = 0.5;
    f.theta = Eigen::Vector2d(0.0, 0.0);
    State x(3);
    x << 1.0, -2.0, 0.5;
    State g(3);
    f.gradient(x, g);
    CHECK(g.norm() == 0.0);

    f.theta = Eigen::Vector2d(1.0, 1.0);
    CHECK_THROWS_AS(f.gradient(State::Zero(3), g), Error);
}

TEST_CASE("least squares: exact recovery, interpolation, and optimality") {
    RbfBasis basis;
    basis.kind = RbfKind::Gaussian;
    basis.centers = RbfBasis::linspace(0.0, 6.0, 7);
    basis.width = 0.5;

    std::mt19937_64 gen(23);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd theta_star =
        Eigen::VectorXd::NullaryExpr(7, [&](Eigen::Index) { return nd(gen); });

    ParametricFunction truth;
    truth.basis = basis;
    truth.theta = theta_star;

    // N > L distinct points
    const std::vector<double> rs40 = RbfBasis::linspace(-0.5, 6.5, 40);
    std::vector<double> ys40;
    for (double r : rs40) ys40.push_back(truth.value_r(r));
    const ParametricFunction fit40 = fit_least_squares(basis, rs40, ys40, false);
    CHECK((fit40.theta - theta_star).lpNorm<Eigen::Infinity>() < 1e-8);

    // N == L: interpolation, zero residual
    const std::vector<double> rs7 = RbfBasis::linspace(0.1, 5.9, 7);
    std::vector<double> ys7;
    for (double r : rs7) ys7.push_back(truth.value_r(r));
    const ParametricFunction fit7 = fit_least_squares(basis, rs7, ys7, false);
    for (size_t i = 0; i < rs7.size(); ++i)
        CHECK(std::fabs(fit7.value_r(rs7[i]) - ys7[i]) < 1e-8);

    // coordinate perturbations do not decrease the empirical risk
    auto risk = [&](const ParametricFunction& f) {
        double acc = 0.0;
        for (size_t i = 0; i < rs40.size(); ++i) {
            const double d = ys40[i] - f.value_r(rs40[i]);
            acc += d * d;
        }
        return acc / static_cast<double>(rs40.size());
    };
    const double base_risk = risk(fit40);
    for (int l = 0; l < 7; ++l) {
        for (const double step : {1e-4, -1e-4}) {
            ParametricFunction pert = fit40;
            pert.theta[l] += step;
            CHECK(risk(pert) >= base_risk - 1e-15);
        }
    }
}

TEST_CASE("least squares reproduces the d=2 shell committor on the paper grid") {
    const ShellProblem shell(2, 5.0, 10.0);
    RbfBasis basis;
    basis.kind = RbfKind::Gaussian;
    basis.centers = RbfBasis::linspace(5.0, 10.0, 11);
    basis.width = 0.25;
    const std::vector<double> rs = RbfBasis::linspace(5.0, 10.0, 51);
    std::vector<double> ys;
    for (double r : rs) ys.push_back(shell.committor(r));
    const ParametricFunction fit = fit_least_squares(basis, rs, ys, true);
    double max_err = 0.0;
    for (size_t i = 0; i < rs.size(); ++i)
        max_err = std::max(max_err, std::fabs(fit.value_r(rs[i]) - ys[i]));
    CHECK(max_err < 1e-2);
}

TEST_CASE("ridge fallback handles singular designs") {
    RbfBasis basis;
    basis.kind = RbfKind::Gaussian;
    basis.centers = {2.0, 2.0, 2.0};  // duplicated columns: singular Gram matrix
    basis.width = 1.0;
    const std::vector<double> rs = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> ys = {0.5, 1.0, 0.5, 0.1};
    const ParametricFunction fit = fit_least_squares(basis, rs, ys, false);
    CHECK(fit.theta.allFinite());
    CHECK(std::fabs(fit.value_r(2.0) - 1.0) < 0.2);
}

TEST_CASE("function record round-trips") {
    ParametricFunction f;
    f.basis.kind = RbfKind::InverseMultiquadric;
    f.basis.centers = RbfBasis::linspace(5.0, 10.0, 5);
    f.basis.width = 0.1;
    f.radialize = true;
    f.theta = Eigen::VectorXd::LinSpaced(5, -0.3, 1.7);
    f.theta[2] = 0.12345678901234567;

    const ParametricFunction g = ParametricFunction::from_record(f.to_record());
    CHECK(g.basis.kind == f.basis.kind);
    CHECK(g.basis.width == f.basis.width);
    CHECK(g.radialize == f.radialize);
    REQUIRE(g.theta.size() == f.theta.size());
    for (int i = 0; i < 5; ++i) {
        CHECK(g.theta[i] == f.theta[i]);
        CHECK(g.basis.centers[static_cast<size_t>(i)] == f.basis.centers[static_cast<size_t>(i)]);
    }
    CHECK_THROWS_AS(ParametricFunction::from_record("kind = gaussian\nwobble = 3\n"), Error);
}

// ---------------------------------------------------------------------------
// benchmarks
// ---------------------------------------------------------------------------

namespace {

// independent quadrature oracle for the shell committor: Psi(r) is the ratio
// of integrals of s^{1-d} (Simpson rule)
double shell_committor_quadrature(int d, double r1, double r2, double r) {
    auto integrate = [d](double a, double b) {
        const long n = 200000;  // even
        const double h = (b - a) / static_cast<double>(n);
        auto f = [d](double s) { return std::pow(s, 1.0 - static_cast<double>(d)); };
        double acc = f(a) + f(b);
        for (long i = 1; i < n; ++i) acc += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
        return acc * h / 3.0;
    };
    return integrate(r1, r) / integrate(r1, r2);
}

} // namespace

TEST_CASE("shell committor closed forms") {
    for (const int d : {1, 2, 3, 10}) {
        const ShellProblem shell(d, 5.0, 10.0);
        CHECK(shell.committor(5.0) == 0.0);
        CHECK(shell.committor(10.0) == 1.0);
        for (const double r : {5.5, 6.5, 7.5, 9.0})
            CHECK(shell.committor(r) ==
                  doctest::Approx(shell_committor_quadrature(d, 5.0, 10.0, r)).epsilon(1e-8));
        // strict monotonicity in r
        double prev = -1.0;
        for (double r = 5.0; r <= 10.0 + 1e-12; r += 0.25) {
            const double v = shell.committor(std::min(r, 10.0));
            CHECK(v > prev);
            prev = v;
        }
        CHECK_THROWS_AS(shell.committor(4.9), Error);
        CHECK_THROWS_AS(shell.committor(10.1), Error);
    }

    const ShellProblem d2(2, 5.0, 10.0);
    CHECK(d2.committor(7.5) == doctest::Approx(std::log(1.5) / std::log(2.0)).epsilon(1e-14));
    const ShellProblem d10(10, 5.0, 10.0);
    const double p = -8.0;
    CHECK(d10.committor(7.5) ==
          doctest::Approx((std::pow(7.5, p) - std::pow(5.0, p)) /
                          (std::pow(10.0, p) - std::pow(5.0, p))));
    // independent of sigma
    const ShellProblem d2s(2, 5.0, 10.0, 3.7);
    CHECK(d2s.committor(7.5) == d2.committor(7.5));
}

TEST_CASE("shell committor is radially harmonic") {
    const double h = 1e-3;
    for (const int d : {2, 3}) {
        const ShellProblem shell(d, 5.0, 10.0);
        for (const double r : {5.5, 6.0, 7.5, 9.0}) {
            const double lap =
                (shell.committor(r + h) - 2.0 * shell.committor(r) + shell.committor(r - h)) /
                    (h * h) +
                (static_cast<double>(d) - 1.0) / r *
                    (shell.committor(r + h) - shell.committor(r - h)) / (2.0 * h);
            CHECK(std::fabs(lap) < 1e-6);
        }
    }
}

TEST_CASE("shell optimal control") {
    const ShellProblem shell(2, 5.0, 10.0);
    State x(2);
    x << 7.5 / std::sqrt(2.0), 7.5 / std::sqrt(2.0);
    const State u = shell.optimal_control(x);
    CHECK(u.norm() == doctest::Approx(1.0 / (7.5 * std::log(1.5))).epsilon(1e-12));
    CHECK(u.dot(x) > 0.0);  // outward

    // magnitude stays finite approaching the outer boundary where Psi -> 1
    State xb(2);
    xb << 9.999, 0.0;
    CHECK(shell.optimal_control(xb).norm() < 1.0);

    // 1D: control sigma / (r - R1), divergent at the inner boundary
    const ShellProblem line(1, 5.0, 10.0, 2.0);
    CHECK(line.optimal_control(state1(6.0))[0] == doctest::Approx(2.0 / 1.0).epsilon(1e-12));
    CHECK(line.optimal_control(state1(5.01))[0] > line.optimal_control(state1(6.0))[0]);

    CHECK_THROWS_AS(shell.optimal_control(State::Zero(2)), Error);
}

TEST_CASE("double well committor quadrature oracle") {
    const DoubleWellProblem dw;
    CHECK(dw.committor(-1.5) == 0.0);
    CHECK(dw.committor(1.5) == 1.0);
    CHECK(dw.committor(0.0) == doctest::Approx(0.5).epsilon(1e-9));
    for (const double x : {0.3, 0.8, 1.2})
        CHECK(dw.committor(-x) + dw.committor(x) == doctest::Approx(1.0).epsilon(1e-6));
    // self-convergence of the quadrature
    CHECK(std::fabs(dw.committor(1.0, 100000) - dw.committor(1.0, 400000)) < 1e-6);
    CHECK_THROWS_AS(dw.committor(0.0, 5), Error);
    CHECK_THROWS_AS(dw.committor(2.0), Error);
}

TEST_CASE("double well biased potentials") {
    DoubleWellProblem dw;
    dw.epsilon_reg = 0.2;
    const long q = 50000;

    // log form: the bias tilts everything toward B (non-increasing bias term)
    double prev_bias = 1e300;
    for (double x = -1.45; x <= 1.45 + 1e-9; x += 0.05) {
        const double bias = dw.biased_potential(x, Formulation::Log, q) -
                            DoubleWellProblem::potential(x);
        CHECK(bias <= prev_bias + 1e-9);
        prev_bias = bias;
    }

    // quad form: the potential slopes down into the A boundary (attractive layer)
    const double hb = 1e-4;
    const double slope_at_a =
        (dw.biased_potential(-1.4995 + hb, Formulation::Quad, q) -
         dw.biased_potential(-1.4995 - hb, Formulation::Quad, q)) /
        (2.0 * hb);
    CHECK(slope_at_a > 0.0);
    CHECK(dw.biased_potential(-1.4999, Formulation::Quad, q) <
          dw.biased_potential(-1.4900, Formulation::Quad, q));

    // huge regularization: both biased potentials reduce to V plus a constant
    DoubleWellProblem flat = dw;
    flat.epsilon_reg = 1e8;
    for (const Formulation form : {Formulation::Log, Formulation::Quad}) {
        const double c0 = flat.biased_potential(-1.0, form, q) - DoubleWellProblem::potential(-1.0);
        const double c1 = flat.biased_potential(0.7, form, q) - DoubleWellProblem::potential(0.7);
        CHECK(std::fabs(c0 - c1) < 1e-6);
    }
}

TEST_CASE("interval mean exit time closed form") {
    CHECK(bm_interval_mfet_exact(-1.0, 1.0, 0.0, 1.0) == 1.0);
    CHECK(bm_interval_mfet_exact(-1.0, 1.0, -1.0, 1.0) == 0.0);
    CHECK(bm_interval_mfet_exact(0.0, 2.0, 1.0, std::sqrt(2.0)) ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(bm_interval_mfet_exact(-1.0, 1.0, 1.5, 1.0), Error);
}

TEST_CASE("ou model construction and approximate integrand") {
    const OuModel ou(10, 10.0, 1.2);
    CHECK(ou.coupling(0, 0) == 2.0);
    CHECK(ou.coupling(0, 1) == -1.0);
    CHECK(ou.coupling(0, 2) == 0.0);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(1, 1) = -5.0;
    CHECK_THROWS_AS(OuModel(bad, 10.0, 1.0), Error);

    const ControlVariateSpec spec = ou.approximate_mfet_cv();
    const State zero = State::Zero(10);
    CHECK(spec.phi(zero) == doctest::Approx(10.0 * 1.44 / 20.0));
    State x = State::Constant(10, 0.2);
    State g(10);
    spec.grad_phi(x, g);
    const double h = 1e-6;
    for (int j = 0; j < 10; ++j) {
        State xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        CHECK(g[j] == doctest::Approx((spec.phi(xp) - spec.phi(xm)) / (2.0 * h)).epsilon(1e-6));
    }

    // drift of the built model is -A x
    const SdeModel model = ou.model();
    State b(10);
    model.drift(x, b);
    State expected = -(ou.coupling * x);
    CHECK((b - expected).norm() < 1e-14);
}

TEST_CASE("zero-policy hit fractions match the committor at five radii, d in {2,10}") {
    for (const int d : {2, 10}) {
        const ShellProblem shell(d, 5.0, 10.0);
        for (const double r : {5.5, 6.5, 7.5, 8.5, 9.5}) {
            const long n = 3000;
            const auto paths = sample_batch_from(
                shell.model(), shell.domain(), FeedbackPolicy::zero(), ControlSign::Plus,
                [d, r](std::uint64_t s) { return sphere_point(d, r, s); }, 0.005, 200000, n,
                derive_seed(13370 + d, static_cast<std::uint64_t>(r * 10)));
            long hits = 0;
            for (const auto& p : paths) {
                REQUIRE(p.exited());
                hits += p.exit == ExitFlag::HitB;
            }
            const double frac = static_cast<double>(hits) / static_cast<double>(n);
            const double psi = shell.committor(r);
            const double se = std::sqrt(std::max(psi * (1.0 - psi), 1e-4) / n);
            CHECK(std::fabs(frac - psi) < 3.0 * se + 0.02);
        }
    }
}

TEST_CASE("general matrix diffusion path: rectangular sigma, k < dim") {
    // dX = sigma dB with sigma = (1, 0.5)^T driving two coordinates from one
    // Brownian motion; exit when the first coordinate leaves (-1, 1)
    SdeModel model;
    model.dim = 2;
    model.noise_dim = 1;
    model.drift = [](const State&, Eigen::Ref<State> out) { out.setZero(); };
    model.diffusion = [](const State&, Eigen::Ref<Eigen::MatrixXd> out) {
        out(0, 0) = 1.0;
        out(1, 0) = 0.5;
    };
    StopDomain domain;
    domain.classify = [](const State& x) {
        if (x[0] <= -1.0) return Region::HitA;
        if (x[0] >= 1.0) return Region::HitB;
        return Region::Interior;
    };

    // both coordinates are driven by the same increments
    const auto rec = simulate_recorded(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                       State::Zero(2), 1e-3, 400000, 404);
    REQUIRE(rec.path.exited());
    for (const auto& s : rec.states) CHECK(s[1] == doctest::Approx(0.5 * s[0]).epsilon(1e-12));

    // Girsanov unit mass through the matrix branch
    FeedbackPolicy pol;
    pol.control = [](const State&, Eigen::Ref<Eigen::VectorXd> u) { u[0] = 0.3; };
    pol.bound = 0.3;
    const auto paths = sample_batch(model, domain, pol, ControlSign::Plus, State::Zero(2), 1e-3,
                                    400000, 4000, 405);
    const auto ones = reweighted_expectation(paths, [](const StoppedPath&) { return 1.0; });
    CHECK(std::fabs(ones.estimate - 1.0) < 3.0 * ones.std_error);

    // martingale accumulator uses sigma^T grad phi
    SimOptions opts;
    opts.martingale_grad = [](const State&, Eigen::Ref<State> g) {
        g[0] = 1.0;
        g[1] = 2.0;
    };
    const auto m_paths = sample_batch(model, domain, FeedbackPolicy::zero(), ControlSign::Plus,
                                      State::Zero(2), 1e-3, 400000, 2000, 406, opts);
    std::vector<double> ms;
    for (const auto& p : m_paths) ms.push_back(p.martingale);
    const SampleStats s = sample_stats(ms);
    CHECK(std::fabs(s.mean) < 3.0 * s.std_error());
    // per path, M_tau = int (1*1 + 0.5*2) dB = 2 B_tau = 2 X1_tau exactly
    for (size_t i = 0; i < 50; ++i)
        CHECK(m_paths[i].martingale ==
              doctest::Approx(2.0 * m_paths[i].x_final[0]).epsilon(1e-10));
}
