#pragma once

#include "vbglmm/expected_loss.hpp"

#include <functional>
#include <vector>

namespace vbglmm {

/// Coordinate gradient descent with Armijo backtracking.
struct CgdConfig {
    double alpha_init = 1.0;
    double delta = 0.5;
    double rho = 0.1;
    double gamma = 0.0;
    double inner_tol = 1e-7;
    int max_sweeps = 1000;
    double opt_tol = 1e-5;
    int max_halvings = 60;
    /// Coordinate visiting order; empty means 0, 1, ..., p.
    std::vector<Index> order;

    void validate() const;
};

/**
 * Exact minimizer of d g + d^2 H / 2 + lambda |beta_j + d|. For the
 * unpenalized intercept this is the Newton step -g/H; otherwise
 * median((lambda - g)/H, -beta_j, (-lambda - g)/H).
 */
double descent_direction(double g, double H, double lambda, double beta_j, bool penalized);

/**
 * Largest alpha in {alpha_init * delta^l} with
 *   F(beta + alpha d e_j) - F(beta) <= alpha * rho * Delta,
 *   Delta = d g + gamma d^2 H + lambda (|beta_j + d| - |beta_j|).
 * objective_change(alpha) must return F(beta + alpha d e_j) - F(beta).
 * Returns 0 without evaluating anything when d == 0; throws
 * NumericalError(StalledLineSearch) after cfg.max_halvings failures.
 */
double armijo_step(const std::function<double(double)>& objective_change, double beta_j, double d,
                   double g, double H, double lambda, bool penalized, const CgdConfig& cfg);

struct CgdResult {
    VectorXd beta;
    int sweeps = 0;
    bool converged = false;
    double objective_start = 0.0;
    double objective_end = 0.0;
    /// Largest violation of the subgradient optimality conditions at beta.
    double max_violation = 0.0;
};

/// F(beta) = f(beta) + sum_{j>=1} lambda_{j} |beta_j|; lambda has length p.
double penalized_objective(const VectorXd& beta, const LossContext& ctx, const VectorXd& lambda);

/// Subgradient optimality violation of beta for F.
double optimality_violation(const VectorXd& beta, const LossContext& ctx, const VectorXd& lambda);

/**
 * Minimize F by cyclic coordinate descent. Stops once a full sweep moves no
 * coordinate by more than inner_tol and the subgradient conditions hold to
 * opt_tol. Coordinates driven to zero are exactly 0.0. If max_sweeps is hit
 * the last iterate is returned with converged = false.
 */
CgdResult solve_beta(const LossContext& ctx, const VectorXd& lambda, const VectorXd& beta_start,
                     const CgdConfig& cfg = {});

/**
 * Unpenalized minimizer of f by damped Newton steps on the full Hessian.
 * A small ridge is added when the Hessian is singular (p + 1 > n). Used as a
 * warm start; returns the last iterate if max_iter is reached.
 */
CgdResult newton_unpenalized(const LossContext& ctx, const VectorXd& beta_start,
                             double grad_tol = 1e-8, int max_iter = 100);

}  // namespace vbglmm
