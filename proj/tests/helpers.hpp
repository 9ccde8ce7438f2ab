// Random instance builders shared by the unit and acceptance tests.
#pragma once

#include "vbglmm/expected_loss.hpp"
#include "vbglmm/model.hpp"

#include <random>
#include <string>
#include <vector>

namespace testing_support {

using namespace vbglmm;

/// Random clustered dataset with plausible responses for `family`.
inline Dataset random_dataset(std::mt19937_64& gen, Family family, Index p, Index m, Index n_i, Index u) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const Index n = m * n_i;
    MatrixXd X(n, p + 1), Z(n, u);
    VectorXd y(n);
    std::vector<std::string> labels(n);
    for (Index k = 0; k < n; ++k) {
        X(k, 0) = 1.0;
        for (Index j = 1; j <= p; ++j) X(k, j) = unif(gen);
        for (Index l = 0; l < u; ++l) Z(k, l) = l == 0 ? 1.0 : unif(gen);
        const double eta = 0.3 * X.row(k).sum();
        switch (family) {
            case Family::Gaussian: y[k] = eta + normal(gen); break;
            case Family::Poisson: y[k] = std::poisson_distribution<int>(std::exp(eta))(gen); break;
            case Family::BernoulliLogit: y[k] = std::bernoulli_distribution(sigmoid(eta))(gen); break;
        }
        labels[k] = std::to_string(k / n_i);
    }
    return group_by_cluster(y, X, Z, labels, family);
}

/// Random q(b) moments: means of size `scale` and SPD covariances.
inline void random_moments(std::mt19937_64& gen, const Dataset& d, double scale, std::vector<VectorXd>& mu,
                           std::vector<MatrixXd>& Sigma) {
    std::normal_distribution<double> normal(0.0, 1.0);
    mu.assign(d.m(), VectorXd());
    Sigma.assign(d.m(), MatrixXd());
    for (Index i = 0; i < d.m(); ++i) {
        mu[i] = VectorXd::NullaryExpr(d.u(), [&] { return scale * normal(gen); });
        MatrixXd A = MatrixXd::NullaryExpr(d.u(), d.u(), [&] { return 0.3 * normal(gen); });
        Sigma[i] = A * A.transpose() + 0.05 * MatrixXd::Identity(d.u(), d.u());
    }
}

}  // namespace testing_support
