#include "vbglmm/fit.hpp"

#include "vbglmm/errors.hpp"
#include "vbglmm/expected_loss.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace vbglmm {

RMode RMode::parse(const std::string& text) {
    if (text == "eb") return empirical_bayes();
    const std::string prefix = "fixed:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string rest = text.substr(prefix.size());
        try {
            std::size_t used = 0;
            const double v = std::stod(rest, &used);
            if (used == rest.size() && v >= 0.0 && std::isfinite(v)) return fixed(v);
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("invalid r mode '" + text + "' (expected fixed:<value> or eb)");
}

std::string RMode::str() const {
    if (kind == Kind::EmpiricalBayes) return "eb";
    std::ostringstream os;
    os << "fixed:" << value;
    return os.str();
}

void FitConfig::validate() const {
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_outer_iters < 0) throw ConfigError("max_outer_iters must be non-negative");
    if (!(zero_eps >= 0.0)) throw ConfigError("zero_eps must be non-negative");
    cgd.validate();
    if (r_mode.kind == RMode::Kind::EmpiricalBayes) ff.validate();
}

VBState initialize(const Dataset& data, const FamilySpec& family, const Hyperparams& hyper) {
    const Index p = data.p();
    const Index u = data.u();
    const double ybar = data.y.mean();

    VBState s;
    s.beta_q = VectorXd::Zero(p + 1);
    switch (family.kind) {
        case Family::Gaussian: s.beta_q[0] = ybar; break;
        case Family::Poisson: s.beta_q[0] = std::log(std::max(ybar, 0.1)); break;
        case Family::BernoulliLogit: {
            const double pbar = std::clamp(ybar, 0.05, 0.95);
            s.beta_q[0] = std::log(pbar / (1.0 - pbar));
            break;
        }
    }
    s.mu_b.assign(static_cast<std::size_t>(data.m()), VectorXd::Zero(u));
    s.Sigma_b.assign(static_cast<std::size_t>(data.m()), 1e-2 * MatrixXd::Identity(u, u));
    s.nu_q = hyper.nu0;
    s.S_q = MatrixXd::Identity(u, u) / hyper.nu0;

    const GammaParams lam = update_lambda(hyper.r, hyper.s, s.beta_q);
    s.lambda_shape = lam.shape;
    s.lambda_rate = lam.rate;

    const double n = static_cast<double>(data.n());
    double var = (data.y.array() - ybar).square().sum() / std::max(n - 1.0, 1.0);
    if (!(var > 0.0)) var = 1.0;
    s.sigma2_shape = 0.5 * n + hyper.alpha_sigma0;
    s.sigma2_scale = s.sigma2_shape * var;

    s.r_shape = hyper.alpha_r0;
    s.r_rate = hyper.beta_r0;
    return s;
}

namespace {

double current_r(const VBState& s, const Hyperparams& hyper, const FitConfig& cfg) {
    if (cfg.r_mode.kind == RMode::Kind::EmpiricalBayes) return s.r_mean();
    (void)hyper;
    return cfg.r_mode.value;
}

void set_lambda(VBState& s, double r, double sval) {
    GammaParams lam = update_lambda(r, sval, s.beta_q);
    s.lambda_shape = std::move(lam.shape);
    s.lambda_rate = std::move(lam.rate);
}

}  // namespace

FitReport fit(const Dataset& data, const FamilySpec& family, const Hyperparams& hyper,
              const FitConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    family.validate();
    hyper.validate();
    cfg.validate();
    if (hyper.S0.rows() != data.u())
        throw ConfigError("S0 dimension does not match the random-effect dimension");

    FitReport report;
    report.family = family.kind;
    VBState s = initialize(data, family, hyper);

    auto annotate = [](const NumericalError& e, int iter) {
        return NumericalError(e.kind(),
                              std::string(e.what()) + " (outer iteration " + std::to_string(iter) + ")");
    };

    const bool eb = cfg.r_mode.kind == RMode::Kind::EmpiricalBayes;
    double r = current_r(s, hyper, cfg);
    set_lambda(s, r, hyper.s);

    if (cfg.mle_init && cfg.max_outer_iters > 0) {
        try {
            const LossContext ctx = make_loss_context(data, family, s.mu_b, s.Sigma_b,
                                                      s.inv_phi_mean(family.kind));
            const CgdResult init = newton_unpenalized(ctx, s.beta_q);
            s.beta_q = init.beta;
            if (!init.converged) report.warnings.push_back("unpenalized warm start did not converge");
        } catch (const NumericalError& e) {
            throw annotate(e, 0);
        }
    }

    int iter = 0;
    for (iter = 1; iter <= cfg.max_outer_iters; ++iter) {
        try {
            const VectorXd beta_old = s.beta_q;

            // Step 2: q(lambda), optionally q(r)
            set_lambda(s, r, hyper.s);
            if (eb) {
                const ScalarGamma qr =
                    update_r(s.lambda_shape, s.lambda_rate, hyper, cfg.ff, {s.r_shape, s.r_rate},
                             static_cast<std::uint64_t>(iter));
                s.r_shape = qr.shape;
                s.r_rate = qr.rate;
                r = s.r_mean();
                set_lambda(s, r, hyper.s);
            }

            // Step 3: q(b)
            BUpdateResult b = update_b(s, data, family, cfg.newton);
            s.mu_b = std::move(b.mu_b);
            s.Sigma_b = std::move(b.Sigma_b);

            // Step 4: q(Q)
            WishartParams w = update_Q(s.mu_b, s.Sigma_b, hyper);
            s.nu_q = w.nu;
            s.S_q = std::move(w.S);

            // Step 5: beta mode
            const LossContext ctx = make_loss_context(data, family, s.mu_b, s.Sigma_b,
                                                      s.inv_phi_mean(family.kind));
            const VectorXd lambda = s.lambda_means();
            const CgdResult cg = solve_beta(ctx, lambda, s.beta_q, cfg.cgd);
            if (cg.objective_end > cg.objective_start + 1e-10 * (1.0 + std::abs(cg.objective_start)))
                throw NumericalError(NumericalErrorKind::StalledLineSearch,
                                     "beta update increased the penalized objective");
            if (!cg.converged)
                report.warnings.push_back("coordinate descent hit max_sweeps at iteration " +
                                          std::to_string(iter));
            s.beta_q = cg.beta;

            // Step 6: q(sigma^2)
            if (family.kind == Family::Gaussian) {
                const InvGammaParams ig = update_sigma2(s.beta_q, s.mu_b, s.Sigma_b, data, hyper);
                s.sigma2_shape = ig.shape;
                s.sigma2_scale = ig.scale;
            }

            const double change = (s.beta_q - beta_old).lpNorm<Eigen::Infinity>();
            report.trace.push_back({change, cg.objective_end});
            if (change < cfg.tol * (1.0 + beta_old.lpNorm<Eigen::Infinity>())) {
                report.converged = true;
                break;
            }
        } catch (const NumericalError& e) {
            throw annotate(e, iter);
        }
    }
    report.iterations = static_cast<int>(report.trace.size());

    const Index u = data.u();
    report.beta_hat = s.beta_q;
    for (Index j = 1; j < s.beta_q.size(); ++j)
        if (std::abs(s.beta_q[j]) > cfg.zero_eps) report.support.push_back(j);
    report.reffects_cov_hat = s.Q_mean().llt().solve(MatrixXd::Identity(u, u));
    if (s.nu_q > static_cast<double>(u) + 1.0) {
        report.reffects_cov_wishart_mean =
            s.S_q.llt().solve(MatrixXd::Identity(u, u)) / (s.nu_q - static_cast<double>(u) - 1.0);
    }
    if (family.kind == Family::Gaussian) {
        report.sigma2_hat = s.sigma2_shape > 1.0 ? s.sigma2_scale / (s.sigma2_shape - 1.0)
                                                 : s.sigma2_scale / s.sigma2_shape;
    }
    report.lambda_means = s.lambda_means();
    report.r_used = r;
    if (eb) report.r_posterior = ScalarGamma{s.r_shape, s.r_rate};
    report.state = std::move(s);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace vbglmm
