#include "vbglmm/cgd.hpp"

#include "vbglmm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <numeric>

namespace vbglmm {

namespace {
constexpr double kRoundingStep = 1e-13;
}  // namespace

void CgdConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("Armijo delta must lie in (0, 1)");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("Armijo rho must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("Armijo gamma must lie in [0, 1)");
    if (!(alpha_init > 0.0)) throw ConfigError("Armijo initial step must be positive");
    if (!(inner_tol > 0.0)) throw ConfigError("inner tolerance must be positive");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");
}

double descent_direction(double g, double H, double lambda, double beta_j, bool penalized) {
    if (!penalized || lambda == 0.0) return -g / H;
    const double hi = (lambda - g) / H;
    const double lo = (-lambda - g) / H;
    // lo <= hi, so the median is -beta_j clamped to [lo, hi]
    return std::clamp(-beta_j, lo, hi);
}

double armijo_step(const std::function<double(double)>& objective_change, double beta_j, double d,
                   double g, double H, double lambda, bool penalized, const CgdConfig& cfg) {
    if (d == 0.0) return 0.0;
    double Delta = d * g + cfg.gamma * d * d * H;
    if (penalized) Delta += lambda * (std::abs(beta_j + d) - std::abs(beta_j));

    double alpha = cfg.alpha_init;
    for (int l = 0; l <= cfg.max_halvings; ++l) {
        if (objective_change(alpha) <= alpha * cfg.rho * Delta) return alpha;
        alpha *= cfg.delta;
    }
    char detail[160];
    std::snprintf(detail, sizeof detail, " (beta_j=%.6g d=%.3g g=%.3g H=%.3g Delta=%.3g)", beta_j, d, g, H,
                  Delta);
    throw NumericalError(NumericalErrorKind::StalledLineSearch,
                         std::string("Armijo line search failed to find a decreasing step") + detail);
}

double penalized_objective(const VectorXd& beta, const LossContext& ctx, const VectorXd& lambda) {
    return f_value(beta, ctx) + lambda.dot(beta.tail(beta.size() - 1).cwiseAbs());
}

double optimality_violation(const VectorXd& beta, const LossContext& ctx, const VectorXd& lambda) {
    const VectorXd g = f_grad(beta, ctx);
    double worst = std::abs(g[0]);
    for (Index j = 1; j < beta.size(); ++j) {
        const double lam = lambda[j - 1];
        const double v = beta[j] == 0.0 ? std::max(0.0, std::abs(g[j]) - lam)
                                         : std::abs(g[j] + lam * (beta[j] > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

CgdResult solve_beta(const LossContext& ctx, const VectorXd& lambda, const VectorXd& beta_start,
                     const CgdConfig& cfg) {
    cfg.validate();
    const Dataset& data = *ctx.data;
    const Index dim = data.X.cols();
    if (beta_start.size() != dim || lambda.size() != dim - 1)
        throw ConfigError("solve_beta: coefficient or penalty length does not match X");
    if ((lambda.array() < 0.0).any()) throw ConfigError("solve_beta: penalties must be >= 0");

    std::vector<Index> order = cfg.order;
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(dim));
        std::iota(order.begin(), order.end(), Index{0});
    }

    CgdResult res;
    res.beta = beta_start;
    const VectorXd& y = data.y;
    const double inv_phi = ctx.inv_phi;
    VectorXd d1(data.n()), d2(data.n());

    double F = penalized_objective(res.beta, ctx, lambda);
    res.objective_start = F;

    for (res.sweeps = 0; res.sweeps < cfg.max_sweeps;) {
        VectorXd means = predictor_means(res.beta, ctx);
        double max_change = 0.0;
        for (Index j : order) {
            const bool penalized = j > 0;
            const double lam = penalized ? lambda[j - 1] : 0.0;
            const auto xj = data.X.col(j);

            double g = 0.0, H = 0.0;
            for (Index k = 0; k < data.n(); ++k) {
                if (xj[k] == 0.0) continue;
                const auto ec = expected_cumulant(means[k], ctx.s2[k], ctx.family, ctx.taylor_order);
                g += xj[k] * (ec.d1 - y[k]);
                H += xj[k] * xj[k] * ec.d2;
            }
            g *= inv_phi;
            H *= inv_phi;
            if (!(H > kHessianFloor)) H = kHessianFloor;

            const double bj = res.beta[j];
            const double d = descent_direction(g, H, lam, bj, penalized);
            auto change = [&](double alpha) {
                const double step = alpha * d;
                double df = 0.0;
                for (Index k = 0; k < data.n(); ++k) {
                    if (xj[k] == 0.0) continue;
                    const double shift = step * xj[k];
                    df += expected_cumulant_change(means[k], ctx.s2[k], shift, ctx.family,
                                                   ctx.taylor_order) -
                          y[k] * shift;
                }
                double dF = inv_phi * df;
                if (penalized) dF += lam * (std::abs(bj + step) - std::abs(bj));
                return dF;
            };
            if (d == 0.0) continue;
            if (std::abs(d) <= kRoundingStep * (1.0 + std::abs(bj))) {
                // step at rounding level: taken without a line search
                res.beta[j] = bj + d;
                means += (res.beta[j] - bj) * xj;
                max_change = std::max(max_change, std::abs(res.beta[j] - bj));
                continue;
            }
            const double alpha = armijo_step(change, bj, d, g, H, lam, penalized, cfg);

            const double dF = change(alpha);
            if (dF > 1e-12 * (1.0 + std::abs(F)))
                throw NumericalError(NumericalErrorKind::StalledLineSearch,
                                     "coordinate step increased the objective");
            F += dF;
            const double updated = alpha == 1.0 ? bj + d : bj + alpha * d;
            const double moved = updated - bj;
            res.beta[j] = updated;
            means += moved * xj;
            max_change = std::max(max_change, std::abs(moved));
        }
        ++res.sweeps;
        if (max_change <= cfg.inner_tol) {
            res.max_violation = optimality_violation(res.beta, ctx, lambda);
            if (res.max_violation <= cfg.opt_tol) {
                res.converged = true;
                break;
            }
        }
    }
    if (!res.converged) res.max_violation = optimality_violation(res.beta, ctx, lambda);
    res.objective_end = penalized_objective(res.beta, ctx, lambda);
    return res;
}

CgdResult newton_unpenalized(const LossContext& ctx, const VectorXd& beta_start, double grad_tol,
                             int max_iter) {
    CgdResult res;
    res.beta = beta_start;
    double F = f_value(res.beta, ctx);
    res.objective_start = F;
    const Index dim = beta_start.size();
    for (res.sweeps = 0; res.sweeps < max_iter; ++res.sweeps) {
        const VectorXd g = f_grad(res.beta, ctx);
        res.max_violation = g.lpNorm<Eigen::Infinity>();
        if (res.max_violation <= grad_tol) {
            res.converged = true;
            break;
        }
        MatrixXd H = f_hessian(res.beta, ctx);
        const double scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1.0);
        Eigen::LLT<MatrixXd> llt(H);
        for (double ridge = 1e-10; llt.info() != Eigen::Success && ridge < 1e6; ridge *= 10.0)
            llt.compute(H + ridge * scale * MatrixXd::Identity(dim, dim));
        if (llt.info() != Eigen::Success)
            throw NumericalError(NumericalErrorKind::NotPositiveDefinite,
                                 "unpenalized Newton: Hessian is not positive definite");
        const VectorXd step = llt.solve(-g);
        const double slope = g.dot(step);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 60; ++h, t *= 0.5) {
            const VectorXd trial = res.beta + t * step;
            double Ft = 0.0;
            try {
                Ft = f_value(trial, ctx);
            } catch (const NumericalError&) {
                continue;
            }
            if (Ft <= F + 1e-4 * t * slope) {
                res.beta = trial;
                F = Ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    res.objective_end = F;
    return res;
}

}  // namespace vbglmm
