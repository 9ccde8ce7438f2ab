#pragma once

#include "vbglmm/model.hpp"

#include <cstdint>
#include <vector>

namespace vbglmm {

struct GammaParams {
    VectorXd shape;
    VectorXd rate;
};

/// q(lambda_j) = Gamma(r + 1, |beta_j| + s) for j = 1..p. beta_q includes the
/// intercept at index 0, which is skipped.
GammaParams update_lambda(double r, double s, const VectorXd& beta_q);

struct WishartParams {
    double nu;
    MatrixXd S;
};

/// q(Q) = Wishart(nu0 + m, (S0^{-1} + sum_i (mu_i mu_i' + Sigma_i))^{-1}).
WishartParams update_Q(const std::vector<VectorXd>& mu_b, const std::vector<MatrixXd>& Sigma_b,
                       const Hyperparams& hyper);

struct InvGammaParams {
    double shape;
    double scale;
};

/// q(sigma^2) for the Gaussian family: shape n/2 + alpha0, scale
/// ||y - X beta - Z mu||^2 / 2 + tr(Z Sigma Z') / 2 + beta0.
InvGammaParams update_sigma2(const VectorXd& beta_q, const std::vector<VectorXd>& mu_b,
                             const std::vector<MatrixXd>& Sigma_b, const Dataset& data,
                             const Hyperparams& hyper);

/// Stochastic fixed-form VB settings for q(r).
struct FixedFormConfig {
    int iterations = 2000;
    double weight = 0.05;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ScalarGamma {
    double shape;
    double rate;
};

/// log p(r, y) up to constants: A r + (alpha0 - 1) log r - p log Gamma(r) with
/// A = p log s - beta0 + sum_j [log lambda_j].
double r_log_joint(double r, double linear_coef, double alpha_r0, Index p);

/**
 * Fixed-form VB (stochastic linear regression of log p(r, y) on the Gamma
 * sufficient statistics T(r) = (log r, -r)) for q(r) = Gamma(shape, rate).
 * The regression coefficients are the natural parameters (shape - 1, rate).
 * Starts from `start`; `stream` selects an independent RNG substream.
 */
ScalarGamma update_r(const VectorXd& lambda_shape, const VectorXd& lambda_rate,
                     const Hyperparams& hyper, const FixedFormConfig& cfg, ScalarGamma start,
                     std::uint64_t stream = 0);

}  // namespace vbglmm
