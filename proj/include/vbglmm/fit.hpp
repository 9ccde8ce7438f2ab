#pragma once

#include "vbglmm/cgd.hpp"
#include "vbglmm/gaussian_approx.hpp"
#include "vbglmm/model.hpp"
#include "vbglmm/vb_updates.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vbglmm {

/// How the Gamma shape r of the lambda_j priors is chosen.
struct RMode {
    enum class Kind { Fixed, EmpiricalBayes };
    Kind kind = Kind::Fixed;
    double value = 0.0;  // used when Fixed

    static RMode fixed(double v) { return {Kind::Fixed, v}; }
    static RMode empirical_bayes() { return {Kind::EmpiricalBayes, 0.0}; }
    /// "fixed:<v>" or "eb"
    static RMode parse(const std::string& text);
    std::string str() const;
};

struct FitConfig {
    double tol = 1e-5;
    int max_outer_iters = 200;
    double zero_eps = 0.0;
    RMode r_mode = RMode::fixed(0.0);
    std::uint64_t seed = 1;
    /// Warm-start beta with the unpenalized fit before the first iteration.
    bool mle_init = true;
    CgdConfig cgd;
    FixedFormConfig ff;
    NewtonOptions newton;

    void validate() const;
};

struct TraceEntry {
    double delta_beta;
    double objective;

    bool operator==(const TraceEntry&) const = default;
};

struct FitReport {
    Family family = Family::Gaussian;
    VectorXd beta_hat;
    /// Indices j >= 1 with |beta_j| > zero_eps.
    std::vector<Index> support;
    /// [Q]^{-1}
    MatrixXd reffects_cov_hat;
    /// E[Q^{-1}] = (S^q)^{-1} / (nu^q - u - 1), when nu^q > u + 1.
    std::optional<MatrixXd> reffects_cov_wishart_mean;
    std::optional<double> sigma2_hat;
    VectorXd lambda_means;
    double r_used = 0.0;
    std::optional<ScalarGamma> r_posterior;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
    VBState state;
};

/// Starting state: intercept-only beta at the link of the (clamped) mean response.
VBState initialize(const Dataset& data, const FamilySpec& family, const Hyperparams& hyper);

/// Block-coordinate VB: lambda, (r), b, Q, beta, (sigma^2) until beta settles.
FitReport fit(const Dataset& data, const FamilySpec& family, const Hyperparams& hyper,
              const FitConfig& cfg);

}  // namespace vbglmm
