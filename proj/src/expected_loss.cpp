#include "vbglmm/expected_loss.hpp"

#include "vbglmm/errors.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace vbglmm {

namespace {

constexpr double kMaxExpArg = 709.0;
constexpr int kMaxTaylorOrder = 40;

// Coefficients (in powers of p = sigmoid(x)) of the k-th derivative of
// log(1 + e^x), k >= 1. D_1 = p and D_{k+1}(p) = D_k'(p) * (p - p^2).
class SigmoidPolynomials {
public:
    SigmoidPolynomials() {
        coeffs_.resize(kMaxTaylorOrder + 3);
        coeffs_[1] = {0.0, 1.0};
        for (std::size_t k = 1; k + 1 < coeffs_.size(); ++k) {
            const auto& c = coeffs_[k];
            std::vector<double> next(c.size() + 1, 0.0);
            for (std::size_t i = 1; i < c.size(); ++i) {
                const double d = static_cast<double>(i) * c[i];  // coefficient of p^{i-1}
                next[i] += d;
                next[i + 1] -= d;
            }
            coeffs_[k + 1] = std::move(next);
        }
    }

    const std::vector<double>& operator[](int k) const { return coeffs_[static_cast<std::size_t>(k)]; }

private:
    std::vector<std::vector<double>> coeffs_;
};

const SigmoidPolynomials& sigmoid_polys() {
    static const SigmoidPolynomials polys;
    return polys;
}

double horner(const std::vector<double>& c, double p) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * p + *it;
    return acc;
}

// P(a) - P(b) = (a - b) * sum_n c_n sum_{i<n} a^i b^{n-1-i}
double poly_difference(const std::vector<double>& c, double a, double b, double a_minus_b) {
    double acc = 0.0;
    for (std::size_t n = 1; n < c.size(); ++n) {
        if (c[n] == 0.0) continue;
        double term = 0.0;
        double ai = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            term += ai * std::pow(b, static_cast<double>(n - 1 - i));
            ai *= a;
        }
        acc += c[n] * term;
    }
    return a_minus_b * acc;
}

// 1 / (2^j j!): E z^{2j} / (2j)! for z ~ N(0,1)
double even_moment_weight(int j) {
    double w = 1.0;
    for (int i = 1; i <= j; ++i) w /= 2.0 * i;
    return w;
}

void check_taylor_order(int K) {
    if (K < 2 || K % 2 != 0 || K > kMaxTaylorOrder)
        throw ConfigError("Taylor order must be even and in [2, 40]");
}

double poisson_mean(double mean, double var) {
    const double arg = mean + 0.5 * var;
    if (!std::isfinite(arg) || arg > kMaxExpArg) {
        std::ostringstream msg;
        msg << "Poisson expected mean exp(" << arg << ") overflows";
        throw NumericalError(NumericalErrorKind::Overflow, msg.str());
    }
    return std::exp(arg);
}

}  // namespace

double log1pexp_derivative(double x, int k) {
    if (k == 0) return log1pexp(x);
    return horner(sigmoid_polys()[k], sigmoid(x));
}

ExpectedCumulant expected_cumulant(double mean, double var, Family family, int taylor_order) {
    switch (family) {
        case Family::Gaussian: return {0.5 * (mean * mean + var), mean, 1.0};
        case Family::Poisson: {
            const double w = poisson_mean(mean, var);
            return {w, w, w};
        }
        case Family::BernoulliLogit: {
            check_taylor_order(taylor_order);
            ExpectedCumulant out{0.0, 0.0, 0.0};
            double var_pow = 1.0;
            for (int j = 0; 2 * j <= taylor_order; ++j) {
                const double w = even_moment_weight(j) * var_pow;
                out.value += w * log1pexp_derivative(mean, 2 * j);
                out.d1 += w * log1pexp_derivative(mean, 2 * j + 1);
                out.d2 += w * log1pexp_derivative(mean, 2 * j + 2);
                var_pow *= var;
            }
            return out;
        }
    }
    return {0.0, 0.0, 0.0};
}

double expected_cumulant_change(double mean, double var, double delta, Family family,
                                int taylor_order) {
    if (delta == 0.0) return 0.0;
    switch (family) {
        case Family::Gaussian: return delta * (mean + 0.5 * delta);
        case Family::Poisson: {
            const double w = poisson_mean(mean, var);
            (void)poisson_mean(mean + delta, var);
            return w * std::expm1(delta);
        }
        case Family::BernoulliLogit: {
            check_taylor_order(taylor_order);
            const double a = sigmoid(mean + delta);
            const double b = sigmoid(mean);
            const double one_minus_b = sigmoid(-mean);
            const double a_minus_b = a * one_minus_b * -std::expm1(-delta);
            double change = 0.0;
            if (std::abs(delta) < 30.0) {
                change = std::log1p(b * std::expm1(delta));
            } else {
                change = log1pexp(mean + delta) - log1pexp(mean);
            }
            double var_pow = var;
            for (int j = 1; 2 * j <= taylor_order; ++j) {
                change += even_moment_weight(j) * var_pow *
                          poly_difference(sigmoid_polys()[2 * j], a, b, a_minus_b);
                var_pow *= var;
            }
            return change;
        }
    }
    return 0.0;
}

LossContext make_loss_context(const Dataset& data, const FamilySpec& family,
                              const std::vector<VectorXd>& mu_b,
                              const std::vector<MatrixXd>& Sigma_b, double inv_phi) {
    family.validate();
    LossContext ctx;
    ctx.data = &data;
    ctx.family = family.kind;
    ctx.taylor_order = family.taylor_order;
    ctx.inv_phi = inv_phi;
    ctx.zmu.resize(data.n());
    ctx.s2.resize(data.n());
    for (Index i = 0; i < data.m(); ++i) {
        const MatrixXd& Zi = data.Z[i];
        const Index off = data.offsets[i];
        ctx.zmu.segment(off, Zi.rows()) = Zi * mu_b[i];
        const MatrixXd ZS = Zi * Sigma_b[i];
        ctx.s2.segment(off, Zi.rows()) = (ZS.array() * Zi.array()).rowwise().sum().max(0.0);
    }
    return ctx;
}

VectorXd predictor_means(const VectorXd& beta, const LossContext& ctx) {
    return ctx.data->X * beta + ctx.zmu;
}

namespace {

template <class Fn>
auto per_observation(Index k, Fn&& fn) {
    try {
        return fn();
    } catch (const NumericalError& e) {
        throw NumericalError(e.kind(), std::string(e.what()) + " at observation " + std::to_string(k));
    }
}

}  // namespace

double f_value_at_means(const VectorXd& means, const LossContext& ctx) {
    const VectorXd& y = ctx.data->y;
    double total = 0.0;
    for (Index k = 0; k < means.size(); ++k) {
        const double e = per_observation(k, [&] {
            return expected_cumulant(means[k], ctx.s2[k], ctx.family, ctx.taylor_order).value;
        });
        total += e - y[k] * means[k];
    }
    return ctx.inv_phi * total;
}

double f_value(const VectorXd& beta, const LossContext& ctx) {
    return f_value_at_means(predictor_means(beta, ctx), ctx);
}

VectorXd f_grad(const VectorXd& beta, const LossContext& ctx) {
    const VectorXd means = predictor_means(beta, ctx);
    VectorXd resid(means.size());
    for (Index k = 0; k < means.size(); ++k) {
        const double d1 = per_observation(k, [&] {
            return expected_cumulant(means[k], ctx.s2[k], ctx.family, ctx.taylor_order).d1;
        });
        resid[k] = d1 - ctx.data->y[k];
    }
    return ctx.inv_phi * (ctx.data->X.transpose() * resid);
}

MatrixXd f_hessian(const VectorXd& beta, const LossContext& ctx) {
    const VectorXd means = predictor_means(beta, ctx);
    VectorXd c(means.size());
    for (Index k = 0; k < means.size(); ++k) {
        c[k] = per_observation(k, [&] {
            return expected_cumulant(means[k], ctx.s2[k], ctx.family, ctx.taylor_order).d2;
        });
    }
    const MatrixXd& X = ctx.data->X;
    return ctx.inv_phi * (X.transpose() * c.asDiagonal() * X);
}

double f_coord_hess(const VectorXd& beta, const LossContext& ctx, Index j) {
    const VectorXd means = predictor_means(beta, ctx);
    const auto xj = ctx.data->X.col(j);
    double h = 0.0;
    for (Index k = 0; k < means.size(); ++k) {
        const double d2 = per_observation(k, [&] {
            return expected_cumulant(means[k], ctx.s2[k], ctx.family, ctx.taylor_order).d2;
        });
        h += xj[k] * xj[k] * d2;
    }
    h *= ctx.inv_phi;
    return h > kHessianFloor ? h : kHessianFloor;
}

}  // namespace vbglmm
