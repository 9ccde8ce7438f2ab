#pragma once

#include "vbglmm/model.hpp"

#include <functional>
#include <vector>

namespace vbglmm {

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 100;
    int max_halvings = 30;
    double divergence_norm = 1e6;
};

struct NewtonResult {
    VectorXd x;
    int iterations = 0;
};

/**
 * Newton-Raphson maximization: x <- x - H(x)^{-1} grad(x) until
 * ||grad||_inf <= tol. A step that lowers the objective is halved (up to
 * max_halvings times). Throws NumericalError on divergence, non-finite
 * iterates or when max_iter is reached.
 */
NewtonResult newton_raphson(const std::function<double(const VectorXd&)>& objective,
                            const std::function<VectorXd(const VectorXd&)>& gradient,
                            const std::function<MatrixXd(const VectorXd&)>& hessian,
                            const VectorXd& start, const NewtonOptions& opts = {});

/**
 * h_i(b) = -1/2 b'[Q]b + [1/phi] (y_i' eta_i - 1' zeta(eta_i)),
 * eta_i = X_i beta + Z_i b: the log-density, up to a constant, of the
 * optimal q(b_i) for one cluster.
 */
class ClusterObjective {
public:
    ClusterObjective(const Dataset& data, Index cluster, Family family, const VectorXd& beta,
                     const MatrixXd& Q_mean, double inv_phi);

    double value(const VectorXd& b) const;
    VectorXd gradient(const VectorXd& b) const;
    /// Always negative definite for SPD [Q].
    MatrixXd hessian(const VectorXd& b) const;

private:
    VectorXd eta(const VectorXd& b) const;

    const Dataset& data_;
    Index cluster_;
    Family family_;
    VectorXd offset_;  // X_i beta
    MatrixXd Q_;
    double inv_phi_;
};

struct BUpdateResult {
    std::vector<VectorXd> mu_b;
    std::vector<MatrixXd> Sigma_b;
    std::vector<int> newton_iters;
    std::vector<bool> converged;
};

/**
 * Gaussian approximation of q(b), cluster by cluster: mu_i = argmax h_i and
 * Sigma_i = ([1/phi] Z_i' diag(zeta''(eta_i*)) Z_i + [Q])^{-1}. Newton starts
 * from state.mu_b (warm start). For the Gaussian family this is the exact
 * conjugate update.
 */
BUpdateResult update_b(const VBState& state, const Dataset& data, const FamilySpec& family,
                       const NewtonOptions& opts = {});

}  // namespace vbglmm
