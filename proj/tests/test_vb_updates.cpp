#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include "vbglmm/errors.hpp"
#include "vbglmm/special_functions.hpp"
#include "vbglmm/vb_updates.hpp"

#include <random>

using namespace vbglmm;
using testing_support::random_dataset;
using testing_support::random_moments;

namespace {

// Posterior mean of r under exp(A r + (a0 - 1) log r - p lgamma(r)), by
// trapezoid quadrature on a log grid.
double quadrature_r_mean(double A, double a0, Index p) {
    const auto logd = [&](double r) { return A * r + (a0 - 1.0) * std::log(r) - p * std::lgamma(r); };
    double peak = -1e300;
    for (double t = -12.0; t <= 6.0; t += 1e-3) peak = std::max(peak, logd(std::exp(t)) + t);
    double z = 0.0, zr = 0.0;
    for (double t = -12.0; t <= 6.0; t += 1e-3) {
        const double r = std::exp(t);
        const double w = std::exp(logd(r) + t - peak);
        z += w;
        zr += w * r;
    }
    return zr / z;
}

}  // namespace

TEST_CASE("update_lambda examples") {
    const GammaParams g = update_lambda(1.0, 0.1, (VectorXd(2) << 5.0, 0.9).finished());
    REQUIRE(g.shape.size() == 1);
    CHECK(g.shape[0] == 2.0);
    CHECK(g.rate[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.shape[0] / g.rate[0] == doctest::Approx(2.0));

    const GammaParams z = update_lambda(0.0, 1e-5, VectorXd::Zero(2));
    CHECK(z.shape[0] / z.rate[0] == doctest::Approx(1e5).epsilon(1e-12));

    const GammaParams neg = update_lambda(1.0, 0.1, (VectorXd(2) << 5.0, -0.9).finished());
    CHECK(neg.rate[0] == g.rate[0]);
}

TEST_CASE("update_Q examples") {
    Hyperparams h = Hyperparams::defaults(1);
    h.nu0 = 2.0;
    h.S0 = MatrixXd::Ones(1, 1);
    const WishartParams w = update_Q({VectorXd::Zero(1)}, {MatrixXd::Ones(1, 1)}, h);
    CHECK(w.nu == 3.0);
    CHECK(w.S(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(w.nu * w.S(0, 0) == doctest::Approx(1.5));

    const WishartParams prior = update_Q({}, {}, h);
    CHECK(prior.nu == 2.0);
    CHECK(prior.S == h.S0);

    const Hyperparams h2 = Hyperparams::defaults(2);
    const WishartParams w2 = update_Q({(VectorXd(2) << 1, 0).finished()}, {MatrixXd::Identity(2, 2)}, h2);
    // direct 2x2 inversion of diag(1e-4 + 2, 1e-4 + 1)
    CHECK(w2.S(0, 0) == doctest::Approx(1.0 / 2.0001).epsilon(1e-14));
    CHECK(w2.S(1, 1) == doctest::Approx(1.0 / 1.0001).epsilon(1e-14));
    CHECK(w2.S(0, 1) == 0.0);
    CHECK(w2.S(0, 0) == doctest::Approx(0.49998).epsilon(1e-5));
    CHECK(w2.S(1, 1) == doctest::Approx(0.99990).epsilon(1e-5));
}

TEST_CASE("update_sigma2 examples") {
    VectorXd y(2);
    y << 1.0, 2.0;
    MatrixXd X(2, 2);
    X << 1, 0, 1, 1;
    const Dataset d = group_by_cluster(y, X, MatrixXd::Identity(2, 2), {"a", "a"}, Family::Gaussian);
    Hyperparams h = Hyperparams::defaults(2);
    h.alpha_sigma0 = h.beta_sigma0 = 1.0;
    const VectorXd beta = (VectorXd(2) << 1.0, 1.0).finished();
    const std::vector<VectorXd> mu0{VectorXd::Zero(2)};
    const std::vector<MatrixXd> S0{MatrixXd::Zero(2, 2)};
    const InvGammaParams perfect = update_sigma2(beta, mu0, S0, d, h);
    CHECK(perfect.shape == 2.0);
    CHECK(perfect.scale == 1.0);
    CHECK(perfect.shape / perfect.scale == 2.0);

    h.alpha_sigma0 = h.beta_sigma0 = 0.0;
    const InvGammaParams resid = update_sigma2((VectorXd(2) << 0.0, 1.0).finished(), mu0, S0, d, h);
    CHECK(resid.shape == 1.0);
    CHECK(resid.scale == doctest::Approx(1.0).epsilon(1e-15));

    const InvGammaParams trace = update_sigma2(beta, mu0, {0.5 * MatrixXd::Identity(2, 2)}, d, h);
    CHECK(trace.scale == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("conjugate updates agree with independent reimplementations") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        // lambda
        const Index p = 1 + t % 9;
        const VectorXd beta = VectorXd::NullaryExpr(p + 1, [&] { return unif(gen) < 0.3 ? 0.0 : normal(gen); });
        const double r = 3 * unif(gen), s = 1e-5 + unif(gen);
        const GammaParams g = update_lambda(r, s, beta);
        for (Index j = 0; j < p; ++j) {
            REQUIRE(std::abs(g.shape[j] - (r + 1.0)) <= 1e-12);
            REQUIRE(std::abs(g.rate[j] - (std::abs(beta[j + 1]) + s)) <= 1e-12);
        }

        // Q
        const Index u = 1 + t % 3;
        const Dataset d = random_dataset(gen, Family::Gaussian, 2, 1 + t % 5, 3, u);
        std::vector<VectorXd> mu;
        std::vector<MatrixXd> Sigma;
        random_moments(gen, d, 1.0, mu, Sigma);
        Hyperparams h = Hyperparams::defaults(u);
        MatrixXd A = MatrixXd::NullaryExpr(u, u, [&] { return normal(gen); });
        h.S0 = A * A.transpose() + MatrixXd::Identity(u, u);
        h.nu0 = u + 2 * unif(gen);
        MatrixXd acc = h.S0.inverse();
        for (Index i = 0; i < d.m(); ++i) acc += mu[i] * mu[i].transpose() + Sigma[i];
        const MatrixXd S_ref = acc.inverse();
        const WishartParams w = update_Q(mu, Sigma, h);
        REQUIRE(std::abs(w.nu - (h.nu0 + d.m())) <= 1e-12);
        REQUIRE((w.S - S_ref).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, S_ref.cwiseAbs().maxCoeff()));
        REQUIRE((w.S - w.S.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        REQUIRE(Eigen::SelfAdjointEigenSolver<MatrixXd>(w.S).eigenvalues().minCoeff() > 0.0);

        // sigma^2
        h.alpha_sigma0 = unif(gen);
        h.beta_sigma0 = unif(gen);
        const VectorXd b = VectorXd::NullaryExpr(3, [&] { return normal(gen); });
        double rss = 0.0, tr = 0.0;
        for (Index i = 0; i < d.m(); ++i) {
            for (Index k = 0; k < d.n_i(i); ++k) {
                const Index row = d.offsets[i] + k;
                double fitted = 0.0;
                for (Index j = 0; j < 3; ++j) fitted += d.X(row, j) * b[j];
                for (Index l = 0; l < u; ++l) fitted += d.Z[i](k, l) * mu[i][l];
                rss += (d.y[row] - fitted) * (d.y[row] - fitted);
                for (Index l = 0; l < u; ++l)
                    for (Index l2 = 0; l2 < u; ++l2) tr += d.Z[i](k, l) * Sigma[i](l, l2) * d.Z[i](k, l2);
            }
        }
        const InvGammaParams ig = update_sigma2(b, mu, Sigma, d, h);
        REQUIRE(std::abs(ig.shape - (d.n() / 2.0 + h.alpha_sigma0)) <= 1e-12);
        const double scale_ref = 0.5 * rss + 0.5 * tr + h.beta_sigma0;
        REQUIRE(std::abs(ig.scale - scale_ref) <= 1e-12 * std::max(1.0, scale_ref));
    }
}

TEST_CASE("r log joint formula") {
    CHECK(r_log_joint(2.0, 0.5, 3.0, 4) == doctest::Approx(1.0 + 2.0 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("fixed-form VB recovers the prior when p = 0") {
    Hyperparams h = Hyperparams::defaults(1);
    h.alpha_r0 = 1.0;
    h.beta_r0 = 1.0;
    double mean_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        FixedFormConfig cfg;
        cfg.seed = seed;
        const ScalarGamma q = update_r(VectorXd(), VectorXd(), h, cfg, ScalarGamma{2.0, 0.5});
        REQUIRE(std::abs(q.shape - h.alpha_r0) <= 0.1 * h.alpha_r0);
        REQUIRE(std::abs(q.rate - h.beta_r0) <= 0.1 * h.beta_r0);
        const ScalarGamma again = update_r(VectorXd(), VectorXd(), h, cfg, ScalarGamma{2.0, 0.5});
        REQUIRE(again.shape == q.shape);
        REQUIRE(again.rate == q.rate);
        mean_sum += q.shape / q.rate;
    }
    CHECK(std::abs(mean_sum / 20.0 - h.alpha_r0 / h.beta_r0) <= 0.05 * h.alpha_r0 / h.beta_r0);
}

TEST_CASE("fixed-form VB with a different prior") {
    Hyperparams h = Hyperparams::defaults(1);
    h.alpha_r0 = 3.0;
    h.beta_r0 = 2.0;
    FixedFormConfig cfg;
    const ScalarGamma q = update_r(VectorXd(), VectorXd(), h, cfg, ScalarGamma{1.0, 1.0});
    CHECK(std::abs(q.shape - 3.0) <= 0.3);
    CHECK(std::abs(q.rate - 2.0) <= 0.2);
}

TEST_CASE("different streams give different draws") {
    const Hyperparams h = Hyperparams::defaults(1);
    const VectorXd shape = VectorXd::Constant(5, 2.0), rate = VectorXd::Constant(5, 0.3);
    const ScalarGamma a = update_r(shape, rate, h, FixedFormConfig{}, ScalarGamma{1.0, 1.0}, 0);
    const ScalarGamma b = update_r(shape, rate, h, FixedFormConfig{}, ScalarGamma{1.0, 1.0}, 1);
    CHECK(a.shape != b.shape);
}

TEST_CASE("large lambdas pull r upward") {
    const Hyperparams h = Hyperparams::defaults(1);
    const Index p = 50;
    // shape 1 and rate exp(psi(1)) / 1e5 give [log lambda] = log 1e5
    const VectorXd shape = VectorXd::Ones(p);
    const VectorXd rate = VectorXd::Constant(p, std::exp(digamma(1.0)) / 1e5);
    FixedFormConfig cfg;
    const ScalarGamma q0 = update_r(VectorXd(), VectorXd(), h, cfg, ScalarGamma{1.0, 1.0});
    const ScalarGamma q50 = update_r(shape, rate, h, cfg, ScalarGamma{1.0, 1.0});
    CHECK(q50.shape / q50.rate > q0.shape / q0.rate);

    const double A = p * std::log(h.s) - h.beta_r0 + p * std::log(1e5);
    const double exact = quadrature_r_mean(A, h.alpha_r0, p);
    CHECK(std::abs(q50.shape / q50.rate - exact) <= 0.05 * exact);
}

TEST_CASE("fixed-form VB tracks the quadrature posterior mean") {
    const Hyperparams h = Hyperparams::defaults(1);
    const Index p = 10;
    for (double log_lambda : {0.0, 3.0, 8.0}) {
        const VectorXd shape = VectorXd::Constant(p, 2.0);
        const VectorXd rate = VectorXd::Constant(p, std::exp(digamma(2.0) - log_lambda));
        const ScalarGamma q = update_r(shape, rate, h, FixedFormConfig{}, ScalarGamma{1.0, 1.0});
        const double A = p * std::log(h.s) - h.beta_r0 + p * log_lambda;
        const double exact = quadrature_r_mean(A, h.alpha_r0, p);
        CHECK(std::abs(q.shape / q.rate - exact) <= 0.1 * exact);
    }
}

TEST_CASE("FixedFormConfig validation") {
    FixedFormConfig cfg;
    cfg.iterations = 101;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.weight = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("log-linear target is recovered exactly") {
    Hyperparams h = Hyperparams::defaults(1);
    h.alpha_r0 = 2.5;
    h.beta_r0 = 0.7;
    const ScalarGamma q = update_r(VectorXd(), VectorXd(), h, FixedFormConfig{}, ScalarGamma{1.0, 1.0});
    CHECK(q.shape == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(q.rate == doctest::Approx(0.7).epsilon(1e-9));
}
