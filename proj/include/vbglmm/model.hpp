#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace vbglmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Family { Gaussian, Poisson, BernoulliLogit };

std::string_view family_name(Family family);
/// Accepts "gaussian", "poisson", "binomial" (also "bernoulli", "logistic").
Family parse_family(std::string_view name);

/**
 * Exponential-family choice with canonical link.
 *
 * taylor_order is the truncation order K of the Taylor expansion used for
 * E log(1 + e^xi) in the Bernoulli expected loss; it must be even and >= 2.
 * Dispersion is fixed at 1 for Poisson and Bernoulli and estimated (phi =
 * sigma^2) for the Gaussian family.
 */
struct FamilySpec {
    Family kind = Family::Gaussian;
    int taylor_order = 2;

    bool dispersion_known() const noexcept { return kind != Family::Gaussian; }
    void validate() const;
};

// Cumulant function zeta and its first two derivatives. zeta_dot is the
// conditional mean g^{-1}(eta).
double zeta(double eta, Family family);
double zeta_dot(double eta, Family family);
double zeta_ddot(double eta, Family family);

/// Numerically stable logistic function.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double log1pexp(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/**
 * Clustered data. Rows are grouped by cluster: cluster i owns rows
 * [offsets[i], offsets[i+1]). X carries the intercept as column 0.
 */
struct Dataset {
    VectorXd y;
    MatrixXd X;
    std::vector<MatrixXd> Z;
    std::vector<Index> offsets{0};
    std::vector<std::string> cluster_labels;

    Index n() const { return y.size(); }
    Index p() const { return X.cols() - 1; }
    Index m() const { return static_cast<Index>(Z.size()); }
    Index u() const { return Z.empty() ? 0 : Z.front().cols(); }
    Index n_i(Index i) const { return offsets[i + 1] - offsets[i]; }

    auto X_block(Index i) const { return X.middleRows(offsets[i], n_i(i)); }
    auto y_block(Index i) const { return y.segment(offsets[i], n_i(i)); }
};

/**
 * Build a Dataset from row-wise data with an arbitrary cluster label per row.
 * Clusters are numbered in order of first appearance; rows keep their
 * relative order within a cluster. X must already contain the intercept
 * column. The result is validated.
 */
Dataset group_by_cluster(const VectorXd& y, const MatrixXd& X, const MatrixXd& Z,
                         const std::vector<std::string>& cluster_of_row, Family family);

/// Checks every Dataset invariant for the given family; throws DataError.
Dataset validate_dataset(Dataset raw, Family family);

/// Prior constants. Use Hyperparams::defaults(u) for the standard flat choices.
struct Hyperparams {
    MatrixXd S0;
    double nu0 = 2.0;
    double r = 0.0;
    double s = 1e-5;
    double alpha_sigma0 = 1e-2;
    double beta_sigma0 = 1e-2;
    double alpha_r0 = 1.0;
    double beta_r0 = 1.0;

    static Hyperparams defaults(Index u);
    void validate() const;
};

/// All variational parameters. beta_q is a point mass; the rest are posteriors.
struct VBState {
    VectorXd beta_q;
    std::vector<VectorXd> mu_b;
    std::vector<MatrixXd> Sigma_b;
    double nu_q = 0.0;
    MatrixXd S_q;
    VectorXd lambda_shape;
    VectorXd lambda_rate;
    double sigma2_shape = 1.0;
    double sigma2_scale = 1.0;
    double r_shape = 1.0;
    double r_rate = 1.0;

    /// [Q] = nu^q S^q
    MatrixXd Q_mean() const { return nu_q * S_q; }
    /// [lambda_j] = alpha / beta; index j runs over penalized coefficients 0..p-1
    double lambda_mean(Index j) const { return lambda_shape[j] / lambda_rate[j]; }
    VectorXd lambda_means() const { return lambda_shape.cwiseQuotient(lambda_rate); }
    double log_lambda_mean(Index j) const;
    /// [1/phi]: alpha/beta of the inverse-Gamma for Gaussian, 1 otherwise.
    double inv_phi_mean(Family family) const {
        return family == Family::Gaussian ? sigma2_shape / sigma2_scale : 1.0;
    }
    double r_mean() const { return r_shape / r_rate; }
};

}  // namespace vbglmm
