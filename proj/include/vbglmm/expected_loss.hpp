#pragma once

#include "vbglmm/model.hpp"

#include <vector>

namespace vbglmm {

/// Hessian entries at or below this are replaced by it.
inline constexpr double kHessianFloor = 1e-10;

/**
 * Everything f(beta) needs besides beta itself. For observation k in cluster
 * i, zmu[k] = z_k' mu_i and s2[k] = z_k' Sigma_i z_k are the mean shift and
 * variance of the random-effect part of eta_k. They depend on q(b) only, so
 * they are computed once per outer iteration.
 */
struct LossContext {
    const Dataset* data = nullptr;
    Family family = Family::Gaussian;
    int taylor_order = 2;
    double inv_phi = 1.0;
    VectorXd zmu;
    VectorXd s2;
};

LossContext make_loss_context(const Dataset& data, const FamilySpec& family,
                              const std::vector<VectorXd>& mu_b,
                              const std::vector<MatrixXd>& Sigma_b, double inv_phi);
LossContext make_loss_context(const Dataset&& data, const FamilySpec& family,
                              const std::vector<VectorXd>& mu_b,
                              const std::vector<MatrixXd>& Sigma_b, double inv_phi) = delete;

/// E[zeta(eta)] for eta ~ N(mean, var) and its first two derivatives in mean.
struct ExpectedCumulant {
    double value;
    double d1;
    double d2;
};

/// Bernoulli uses the order-K Taylor expansion of log(1 + e^{mean + sd*z}) at z = 0.
ExpectedCumulant expected_cumulant(double mean, double var, Family family, int taylor_order);

/// E[zeta] at (mean + delta) minus at mean, without cancellation.
double expected_cumulant_change(double mean, double var, double delta, Family family,
                                int taylor_order);

/// k-th derivative of log(1 + e^x); k = 0 gives the function itself.
double log1pexp_derivative(double x, int k);

/// Linear predictor means X beta + zmu.
VectorXd predictor_means(const VectorXd& beta, const LossContext& ctx);

/**
 * Expected negative log-likelihood
 *   f(beta) = [1/phi] sum_k ( E zeta(eta_k) - y_k (x_k' beta + zmu_k) ),
 * dropping terms that do not depend on beta.
 */
double f_value(const VectorXd& beta, const LossContext& ctx);
double f_value_at_means(const VectorXd& means, const LossContext& ctx);

VectorXd f_grad(const VectorXd& beta, const LossContext& ctx);

/// Full Hessian X' diag(c) X; Bernoulli entries of c may be negative for K >= 4.
MatrixXd f_hessian(const VectorXd& beta, const LossContext& ctx);

/// e_j' (d^2 f) e_j, floored at kHessianFloor.
double f_coord_hess(const VectorXd& beta, const LossContext& ctx, Index j);

}  // namespace vbglmm
