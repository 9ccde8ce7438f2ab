#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include "vbglmm/errors.hpp"
#include "vbglmm/expected_loss.hpp"

#include <random>

using namespace vbglmm;
using testing_support::random_dataset;
using testing_support::random_moments;

namespace {

Dataset single_obs(Family family, double y, double x = 1.0) {
    VectorXd yv = VectorXd::Constant(1, y);
    MatrixXd X = MatrixXd::Constant(1, 1, x);
    return group_by_cluster(yv, X, MatrixXd::Ones(1, 1), {"c"}, family);
}

LossContext context(const Dataset& d, Family family, double s2, int K = 2, double inv_phi = 1.0) {
    std::vector<VectorXd> mu(d.m(), VectorXd::Zero(d.u()));
    std::vector<MatrixXd> Sigma(d.m(), MatrixXd::Constant(d.u(), d.u(), s2));
    return make_loss_context(d, FamilySpec{family, K}, mu, Sigma, inv_phi);
}

double rel_err(const VectorXd& a, const VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

}  // namespace

TEST_CASE("Poisson single observation") {
    const Dataset d = single_obs(Family::Poisson, 1.0);
    const LossContext ctx = context(d, Family::Poisson, 0.0);
    const VectorXd beta = VectorXd::Zero(1);
    CHECK(f_value(beta, ctx) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f_grad(beta, ctx)[0] == doctest::Approx(0.0));
    CHECK(f_coord_hess(beta, ctx, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Bernoulli K=2 single observation with unit variance") {
    const Dataset d = single_obs(Family::BernoulliLogit, 0.0);
    const LossContext ctx = context(d, Family::BernoulliLogit, 1.0);
    const double f = f_value(VectorXd::Zero(1), ctx);
    CHECK(f == doctest::Approx(std::log(2.0) + 0.125).epsilon(1e-14));
    const double gh = oracle::normal_expectation(oracle::softplus, 0.0, 1.0);
    CHECK(std::abs(f - gh) <= 0.02);
}

TEST_CASE("Bernoulli coordinate Hessian at zero") {
    const Dataset d = single_obs(Family::BernoulliLogit, 0.0);
    const LossContext ctx = context(d, Family::BernoulliLogit, 0.0);
    CHECK(f_coord_hess(VectorXd::Zero(1), ctx, 0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("Gaussian value at a perfect fit") {
    std::mt19937_64 gen(3);
    Dataset d = random_dataset(gen, Family::Gaussian, 2, 3, 4, 1);
    const VectorXd beta = VectorXd::Random(3);
    d.y = d.X * beta;
    const LossContext ctx = context(d, Family::Gaussian, 0.0);
    CHECK(f_value(beta, ctx) == doctest::Approx(-0.5 * d.y.squaredNorm()).epsilon(1e-13));
}

TEST_CASE("Gaussian gradient vanishes at least squares") {
    std::mt19937_64 gen(4);
    const Dataset d = random_dataset(gen, Family::Gaussian, 3, 4, 5, 1);
    const LossContext ctx = context(d, Family::Gaussian, 0.0, 2, 1.7);
    const VectorXd ls = d.X.colPivHouseholderQr().solve(d.y);
    CHECK(f_grad(ls, ctx).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("Gaussian coordinate Hessian scales with dispersion") {
    VectorXd y = VectorXd::Zero(4);
    MatrixXd X(4, 2);
    X << 1, 1, 1, -1, 1, 1, 1, -1;
    const Dataset d = group_by_cluster(y, X, MatrixXd::Ones(4, 1), {"a", "a", "b", "b"}, Family::Gaussian);
    const LossContext ctx = context(d, Family::Gaussian, 0.0, 2, 2.0);
    CHECK(f_coord_hess(VectorXd::Zero(2), ctx, 1) == 8.0);
}

TEST_CASE("gradient and Hessian agree with finite differences") {
    struct Case {
        Family family;
        int K;
    };
    const Case cases[] = {{Family::Gaussian, 2}, {Family::Poisson, 2}, {Family::BernoulliLogit, 2},
                          {Family::BernoulliLogit, 4}, {Family::BernoulliLogit, 6}};
    std::mt19937_64 gen(11);
    for (const Case& c : cases) {
        for (int t = 0; t < 100; ++t) {
            const Dataset d = random_dataset(gen, c.family, 3, 3, 4, 2);
            std::vector<VectorXd> mu;
            std::vector<MatrixXd> Sigma;
            random_moments(gen, d, 0.5, mu, Sigma);
            const LossContext ctx = make_loss_context(d, FamilySpec{c.family, c.K}, mu, Sigma, 1.3);
            const VectorXd beta = 0.7 * VectorXd::Random(d.p() + 1);
            const auto f = [&](const VectorXd& b) { return f_value(b, ctx); };
            const auto g = [&](const VectorXd& b) { return f_grad(b, ctx); };
            REQUIRE(rel_err(f_grad(beta, ctx), oracle::central_gradient(f, beta)) <= 1e-5);
            const MatrixXd H = f_hessian(beta, ctx);
            const MatrixXd Hfd = oracle::central_jacobian(g, beta);
            REQUIRE((H - Hfd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, Hfd.cwiseAbs().maxCoeff()));
            for (Index j = 0; j <= d.p(); ++j)
                REQUIRE(f_coord_hess(beta, ctx, j) == doctest::Approx(std::max(H(j, j), kHessianFloor)));
        }
    }
}

TEST_CASE("convex families have positive coordinate Hessians") {
    std::mt19937_64 gen(12);
    for (Family family : {Family::Gaussian, Family::Poisson}) {
        for (int t = 0; t < 50; ++t) {
            const Dataset d = random_dataset(gen, family, 4, 3, 3, 1);
            std::vector<VectorXd> mu;
            std::vector<MatrixXd> Sigma;
            random_moments(gen, d, 0.5, mu, Sigma);
            const LossContext ctx = make_loss_context(d, FamilySpec{family, 2}, mu, Sigma, 1.0);
            const VectorXd beta = VectorXd::Random(d.p() + 1);
            const MatrixXd H = f_hessian(beta, ctx);
            for (Index j = 0; j <= d.p(); ++j) REQUIRE(H(j, j) > 0.0);
        }
    }
}

TEST_CASE("zero random-effect variance gives the plain negative log-likelihood") {
    std::mt19937_64 gen(13);
    for (Family family : {Family::Gaussian, Family::Poisson, Family::BernoulliLogit}) {
        for (int t = 0; t < 20; ++t) {
            const Dataset d = random_dataset(gen, family, 3, 3, 4, 1);
            std::vector<VectorXd> mu;
            std::vector<MatrixXd> Sigma;
            random_moments(gen, d, 0.5, mu, Sigma);
            for (auto& S : Sigma) S.setZero();
            const LossContext ctx = make_loss_context(d, FamilySpec{family, 4}, mu, Sigma, 1.0);
            const auto nll = [&](const VectorXd& beta) {
                double acc = 0.0;
                for (Index i = 0; i < d.m(); ++i) {
                    for (Index r = 0; r < d.n_i(i); ++r) {
                        const Index k = d.offsets[i] + r;
                        const double eta = d.X.row(k).dot(beta) + d.Z[i].row(r).dot(mu[i]);
                        const double y = d.y[k];
                        switch (family) {
                            case Family::Gaussian: acc += 0.5 * (y - eta) * (y - eta) - 0.5 * y * y; break;
                            case Family::Poisson: acc += std::exp(eta) - y * eta; break;
                            case Family::BernoulliLogit: acc += oracle::softplus(eta) - y * eta; break;
                        }
                    }
                }
                return acc;
            };
            const VectorXd beta = VectorXd::Random(d.p() + 1);
            REQUIRE(std::abs(f_value(beta, ctx) - nll(beta)) <= 1e-10);
        }
    }
}

TEST_CASE("Bernoulli K=2 Taylor value against Gauss-Hermite") {
    for (double m = -3.0; m <= 3.0; m += 0.5) {
        for (double s2 : {0.1, 0.5, 1.0}) {
            const double taylor = expected_cumulant(m, s2, Family::BernoulliLogit, 2).value;
            const double gh = oracle::normal_expectation(oracle::softplus, m, s2);
            REQUIRE(std::abs(taylor - gh) <= 0.02);
        }
        REQUIRE(std::abs(expected_cumulant(m, 0.0, Family::BernoulliLogit, 2).value - oracle::softplus(m)) <= 1e-12);
    }
}

TEST_CASE("Taylor error shrinks with variance") {
    double prev = 1.0;
    for (double s2 : {1.0, 0.5, 0.25, 0.125}) {
        const double err = std::abs(expected_cumulant(0.7, s2, Family::BernoulliLogit, 2).value -
                                    oracle::normal_expectation(oracle::softplus, 0.7, s2));
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("closed-form expectations for Poisson and Gaussian") {
    const auto p = expected_cumulant(0.3, 0.4, Family::Poisson, 2);
    CHECK(p.value == doctest::Approx(oracle::normal_expectation([](double x) { return std::exp(x); }, 0.3, 0.4))
                         .epsilon(1e-12));
    CHECK(p.d1 == p.value);
    CHECK(p.d2 == p.value);
    const auto g = expected_cumulant(0.3, 0.4, Family::Gaussian, 2);
    CHECK(g.value == doctest::Approx(0.5 * (0.09 + 0.4)).epsilon(1e-15));
    CHECK(g.d1 == doctest::Approx(0.3));
    CHECK(g.d2 == 1.0);
}

TEST_CASE("log1pexp derivatives agree with finite differences") {
    for (double x : {-5.0, -1.0, 0.0, 0.4, 3.0}) {
        for (int k = 0; k < 6; ++k) {
            const double h = 1e-4;
            const double fd = (log1pexp_derivative(x + h, k) - log1pexp_derivative(x - h, k)) / (2 * h);
            REQUIRE(log1pexp_derivative(x, k + 1) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
    CHECK(log1pexp_derivative(0.0, 1) == 0.5);
    CHECK(log1pexp_derivative(0.0, 2) == 0.25);
}

TEST_CASE("cumulant change matches the plain difference") {
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (Family family : {Family::Gaussian, Family::Poisson, Family::BernoulliLogit}) {
        for (int K : {2, 4}) {
            for (int t = 0; t < 200; ++t) {
                const double m = unif(gen), v = 0.5 * (unif(gen) + 3.0) / 3.0, dl = unif(gen);
                const double direct = expected_cumulant(m + dl, v, family, K).value -
                                      expected_cumulant(m, v, family, K).value;
                REQUIRE(expected_cumulant_change(m, v, dl, family, K) ==
                        doctest::Approx(direct).epsilon(1e-10).scale(1.0));
            }
        }
    }
    // tiny steps keep full relative precision
    const double dl = 1e-13;
    const double change = expected_cumulant_change(1.0, 0.2, dl, Family::Poisson, 2);
    CHECK(change == doctest::Approx(std::exp(1.1) * dl).epsilon(1e-10));
}

TEST_CASE("Poisson overflow names the observation") {
    const Dataset d = single_obs(Family::Poisson, 1.0);
    const LossContext ctx = context(d, Family::Poisson, 0.0);
    try {
        f_value(VectorXd::Constant(1, 800.0), ctx);
        FAIL("no throw");
    } catch (const NumericalError& e) {
        CHECK(e.kind() == NumericalErrorKind::Overflow);
        CHECK(std::string(e.what()).find("observation 0") != std::string::npos);
    }
}
