#include "vbglmm/vb_updates.hpp"

#include "vbglmm/errors.hpp"
#include "vbglmm/rng.hpp"
#include "vbglmm/special_functions.hpp"

#include <cmath>

namespace vbglmm {

GammaParams update_lambda(double r, double s, const VectorXd& beta_q) {
    const Index p = beta_q.size() - 1;
    GammaParams out{VectorXd::Constant(p, r + 1.0), VectorXd(p)};
    for (Index j = 0; j < p; ++j) out.rate[j] = std::abs(beta_q[j + 1]) + s;
    return out;
}

WishartParams update_Q(const std::vector<VectorXd>& mu_b, const std::vector<MatrixXd>& Sigma_b,
                       const Hyperparams& hyper) {
    const Index u = hyper.S0.rows();
    if (mu_b.empty()) return {hyper.nu0, hyper.S0};

    MatrixXd precision = hyper.S0.llt().solve(MatrixXd::Identity(u, u));
    for (std::size_t i = 0; i < mu_b.size(); ++i)
        precision += mu_b[i] * mu_b[i].transpose() + Sigma_b[i];
    precision = 0.5 * (precision + precision.transpose());

    Eigen::LLT<MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success)
        throw NumericalError(NumericalErrorKind::NotPositiveDefinite,
                             "Wishart scale update: matrix is not positive definite");
    MatrixXd S = llt.solve(MatrixXd::Identity(u, u));
    S = 0.5 * (S + S.transpose());
    return {hyper.nu0 + static_cast<double>(mu_b.size()), std::move(S)};
}

InvGammaParams update_sigma2(const VectorXd& beta_q, const std::vector<VectorXd>& mu_b,
                             const std::vector<MatrixXd>& Sigma_b, const Dataset& data,
                             const Hyperparams& hyper) {
    double rss = 0.0;
    double trace = 0.0;
    for (Index i = 0; i < data.m(); ++i) {
        const MatrixXd& Zi = data.Z[i];
        const VectorXd resid = data.y_block(i) - data.X_block(i) * beta_q - Zi * mu_b[i];
        rss += resid.squaredNorm();
        trace += (Zi * Sigma_b[i] * Zi.transpose()).trace();
    }
    return {0.5 * static_cast<double>(data.n()) + hyper.alpha_sigma0,
            0.5 * rss + 0.5 * trace + hyper.beta_sigma0};
}

void FixedFormConfig::validate() const {
    if (iterations < 100 || iterations % 2 != 0)
        throw ConfigError("fixed-form VB needs an even number of iterations >= 100");
    if (!(weight > 0.0 && weight < 1.0)) throw ConfigError("fixed-form VB weight must lie in (0, 1)");
}

double r_log_joint(double r, double linear_coef, double alpha_r0, Index p) {
    return linear_coef * r + (alpha_r0 - 1.0) * std::log(r) -
           static_cast<double>(p) * log_gamma(r);
}

namespace {

constexpr double kMinParam = 1e-3;
constexpr int kMaxRejects = 100;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Covariance of T(r) = (log r, -r) under Gamma(shape, rate).
Mat2 sufficient_stat_cov(double shape, double rate) {
    Mat2 C;
    C << trigamma(shape), -1.0 / rate, -1.0 / rate, shape / (rate * rate);
    return C;
}

ScalarGamma from_natural(const Vec2& theta) {
    return {std::max(theta[0] + 1.0, kMinParam), std::max(theta[1], kMinParam)};
}

Vec2 to_natural(ScalarGamma q) { return {q.shape - 1.0, q.rate}; }

}  // namespace

ScalarGamma update_r(const VectorXd& lambda_shape, const VectorXd& lambda_rate,
                     const Hyperparams& hyper, const FixedFormConfig& cfg, ScalarGamma start,
                     std::uint64_t stream) {
    cfg.validate();
    const Index p = lambda_shape.size();
    double linear = static_cast<double>(p) * std::log(hyper.s) - hyper.beta_r0;
    for (Index j = 0; j < p; ++j) linear += digamma(lambda_shape[j]) - std::log(lambda_rate[j]);

    auto log_joint = [&](double r) { return r_log_joint(r, linear, hyper.alpha_r0, p); };

    auto engine = keyed_engine(cfg.seed, {stream});
    auto draw = [&](ScalarGamma q, double& lp) {
        std::gamma_distribution<double> gamma(q.shape, 1.0 / q.rate);
        for (int attempt = 0; attempt < kMaxRejects; ++attempt) {
            const double r = gamma(engine);
            if (r > 0.0 && std::isfinite(r)) {
                lp = log_joint(r);
                if (std::isfinite(lp)) return r;
            }
        }
        throw NumericalError(NumericalErrorKind::NonFinite,
                             "fixed-form VB: could not draw r with a finite log density");
    };

    ScalarGamma q{std::max(start.shape, kMinParam), std::max(start.rate, kMinParam)};
    Mat2 C = sufficient_stat_cov(q.shape, q.rate);
    Vec2 g = C * to_natural(q);
    Mat2 C_sum = Mat2::Zero();
    Vec2 g_sum = Vec2::Zero();

    const double c = cfg.weight;
    for (int i = 1; i <= cfg.iterations; ++i) {
        q = from_natural(C.partialPivLu().solve(g));
        double lp1 = 0.0, lp2 = 0.0;
        const double r1 = draw(q, lp1);
        const double r2 = draw(q, lp2);
        const Vec2 dT(std::log(r1) - std::log(r2), r2 - r1);
        const Vec2 g_hat = 0.5 * (lp1 - lp2) * dT;
        const Mat2 C_hat = 0.5 * dT * dT.transpose();
        g = (1.0 - c) * g + c * g_hat;
        C = (1.0 - c) * C + c * C_hat;
        if (i > cfg.iterations / 2) {
            g_sum += g_hat;
            C_sum += C_hat;
        }
    }
    return from_natural(C_sum.partialPivLu().solve(g_sum));
}

}  // namespace vbglmm
