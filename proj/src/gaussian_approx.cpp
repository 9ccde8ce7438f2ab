#include "vbglmm/gaussian_approx.hpp"

#include "vbglmm/errors.hpp"

#include <cmath>

namespace vbglmm {

NewtonResult newton_raphson(const std::function<double(const VectorXd&)>& objective,
                            const std::function<VectorXd(const VectorXd&)>& gradient,
                            const std::function<MatrixXd(const VectorXd&)>& hessian,
                            const VectorXd& start, const NewtonOptions& opts) {
    NewtonResult res{start, 0};
    VectorXd g = gradient(res.x);
    double value = objective(res.x);
    while (true) {
        if (!g.allFinite() || !std::isfinite(value))
            throw NumericalError(NumericalErrorKind::NonFinite, "Newton iterate is not finite");
        if (g.lpNorm<Eigen::Infinity>() <= opts.tol) return res;
        if (res.iterations >= opts.max_iter) {
            throw NumericalError(NumericalErrorKind::MaxIterExceeded,
                                 "Newton-Raphson did not converge in " +
                                     std::to_string(opts.max_iter) + " iterations");
        }
        const MatrixXd H = hessian(res.x);
        Eigen::LLT<MatrixXd> llt(-H);
        if (llt.info() != Eigen::Success)
            throw NumericalError(NumericalErrorKind::NotPositiveDefinite,
                                 "negative Hessian is not positive definite");
        const VectorXd step = llt.solve(g);  // ascent direction -H^{-1} g

        double t = 1.0;
        VectorXd trial = res.x + step;
        double trial_value = objective(trial);
        const double slack = 1e-12 * (1.0 + std::abs(value));
        for (int h = 0; h < opts.max_halvings && !(trial_value >= value - slack); ++h) {
            t *= 0.5;
            trial = res.x + t * step;
            trial_value = objective(trial);
        }
        res.x = std::move(trial);
        value = trial_value;
        ++res.iterations;
        if (!res.x.allFinite() || res.x.norm() > opts.divergence_norm)
            throw NumericalError(NumericalErrorKind::NewtonDiverged, "Newton-Raphson diverged");
        g = gradient(res.x);
    }
}

ClusterObjective::ClusterObjective(const Dataset& data, Index cluster, Family family,
                                   const VectorXd& beta, const MatrixXd& Q_mean, double inv_phi)
    : data_(data),
      cluster_(cluster),
      family_(family),
      offset_(data.X_block(cluster) * beta),
      Q_(Q_mean),
      inv_phi_(inv_phi) {}

VectorXd ClusterObjective::eta(const VectorXd& b) const { return offset_ + data_.Z[cluster_] * b; }

double ClusterObjective::value(const VectorXd& b) const {
    const VectorXd e = eta(b);
    const auto y = data_.y_block(cluster_);
    double loglik = 0.0;
    for (Index k = 0; k < e.size(); ++k) loglik += y[k] * e[k] - zeta(e[k], family_);
    return -0.5 * b.dot(Q_ * b) + inv_phi_ * loglik;
}

VectorXd ClusterObjective::gradient(const VectorXd& b) const {
    const VectorXd e = eta(b);
    const auto y = data_.y_block(cluster_);
    VectorXd r(e.size());
    for (Index k = 0; k < e.size(); ++k) r[k] = y[k] - zeta_dot(e[k], family_);
    return inv_phi_ * (data_.Z[cluster_].transpose() * r) - Q_ * b;
}

MatrixXd ClusterObjective::hessian(const VectorXd& b) const {
    const VectorXd e = eta(b);
    VectorXd w(e.size());
    for (Index k = 0; k < e.size(); ++k) w[k] = zeta_ddot(e[k], family_);
    const MatrixXd& Z = data_.Z[cluster_];
    return -inv_phi_ * (Z.transpose() * w.asDiagonal() * Z) - Q_;
}

BUpdateResult update_b(const VBState& state, const Dataset& data, const FamilySpec& family,
                       const NewtonOptions& opts) {
    const Index m = data.m();
    const Index u = data.u();
    const MatrixXd Q = state.Q_mean();
    const double inv_phi = state.inv_phi_mean(family.kind);

    BUpdateResult out;
    out.mu_b.resize(static_cast<std::size_t>(m));
    out.Sigma_b.resize(static_cast<std::size_t>(m));
    out.newton_iters.assign(static_cast<std::size_t>(m), 0);
    out.converged.assign(static_cast<std::size_t>(m), false);

    for (Index i = 0; i < m; ++i) {
        const ClusterObjective h(data, i, family.kind, state.beta_q, Q, inv_phi);
        VectorXd start = VectorXd::Zero(u);
        if (static_cast<Index>(state.mu_b.size()) == m && state.mu_b[i].size() == u)
            start = state.mu_b[i];
        try {
            NewtonResult nr = newton_raphson([&](const VectorXd& b) { return h.value(b); },
                                             [&](const VectorXd& b) { return h.gradient(b); },
                                             [&](const VectorXd& b) { return h.hessian(b); }, start,
                                             opts);
            out.newton_iters[i] = nr.iterations;
            out.converged[i] = true;
            Eigen::LLT<MatrixXd> llt(-h.hessian(nr.x));
            if (llt.info() != Eigen::Success)
                throw NumericalError(NumericalErrorKind::NotPositiveDefinite,
                                     "posterior precision is not positive definite");
            MatrixXd Sigma = llt.solve(MatrixXd::Identity(u, u));
            out.Sigma_b[i] = 0.5 * (Sigma + Sigma.transpose());
            out.mu_b[i] = std::move(nr.x);
        } catch (const NumericalError& e) {
            throw NumericalError(e.kind(), std::string(e.what()) + " in cluster " +
                                               data.cluster_labels[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

}  // namespace vbglmm
