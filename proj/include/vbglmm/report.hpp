#pragma once

#include "vbglmm/fit.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace vbglmm {

struct NamedValue {
    std::string name;
    double value;

    bool operator==(const NamedValue&) const = default;
};

using DenseRows = std::vector<std::vector<double>>;

struct ReportColumns {
    std::string cluster;
    std::string response;
    std::vector<std::string> fixed;
    std::vector<std::string> random;

    bool operator==(const ReportColumns&) const = default;
};

/// Fully resolved settings a fit ran with.
struct ReportHyperparameters {
    DenseRows S0;
    double nu0 = 0.0;
    double r = 0.0;
    double s = 0.0;
    double alpha_sigma0 = 0.0;
    double beta_sigma0 = 0.0;
    double alpha_r0 = 0.0;
    double beta_r0 = 0.0;
    std::string r_mode;
    int taylor_order = 2;
    double tol = 0.0;
    int max_outer_iters = 0;
    std::uint64_t seed = 0;

    bool operator==(const ReportHyperparameters&) const = default;
};

/// The serialized form of a fit: everything needed to audit it without rerunning.
struct FitSummary {
    int schema_version = 1;
    std::string family;
    ReportColumns columns;
    ReportHyperparameters hyperparameters;
    std::vector<NamedValue> beta_hat;
    std::vector<std::string> support;
    DenseRows reffects_cov_hat;
    std::optional<DenseRows> reffects_cov_wishart_mean;
    std::optional<double> sigma2_hat;
    std::vector<NamedValue> lambda_means;
    double r_used = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<TraceEntry> trace;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;
    std::string timestamp;

    bool operator==(const FitSummary&) const = default;
};

inline constexpr const char* kInterceptName = "(Intercept)";

FitSummary summarize(const FitReport& report, const ReportColumns& columns,
                     const FamilySpec& family, const Hyperparams& hyper, const FitConfig& cfg,
                     std::string timestamp);

nlohmann::ordered_json to_json(const FitSummary& summary);
FitSummary summary_from_json(const nlohmann::json& j);

/// Short text summary: selected variables, estimates, random-effect covariance.
std::string human_summary(const FitSummary& summary);

/// Current UTC time in ISO-8601.
std::string utc_timestamp();

}  // namespace vbglmm
