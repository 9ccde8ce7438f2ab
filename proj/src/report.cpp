#include "vbglmm/report.hpp"

#include "vbglmm/errors.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace vbglmm {

namespace {

DenseRows rows_of(const MatrixXd& M) {
    DenseRows out(static_cast<std::size_t>(M.rows()));
    for (Index r = 0; r < M.rows(); ++r)
        for (Index c = 0; c < M.cols(); ++c) out[static_cast<std::size_t>(r)].push_back(M(r, c));
    return out;
}

template <class T>
void put_optional(nlohmann::ordered_json& j, const char* key, const std::optional<T>& v) {
    if (v) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

template <class T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

FitSummary summarize(const FitReport& report, const ReportColumns& columns,
                     const FamilySpec& family, const Hyperparams& hyper, const FitConfig& cfg,
                     std::string timestamp) {
    FitSummary s;
    s.family = std::string(family_name(family.kind));
    s.columns = columns;

    auto& h = s.hyperparameters;
    h.S0 = rows_of(hyper.S0);
    h.nu0 = hyper.nu0;
    h.r = cfg.r_mode.kind == RMode::Kind::Fixed ? cfg.r_mode.value : report.r_used;
    h.s = hyper.s;
    h.alpha_sigma0 = hyper.alpha_sigma0;
    h.beta_sigma0 = hyper.beta_sigma0;
    h.alpha_r0 = hyper.alpha_r0;
    h.beta_r0 = hyper.beta_r0;
    h.r_mode = cfg.r_mode.str();
    h.taylor_order = family.taylor_order;
    h.tol = cfg.tol;
    h.max_outer_iters = cfg.max_outer_iters;
    h.seed = cfg.seed;

    auto name_of = [&](Index j) {
        if (j == 0) return std::string(kInterceptName);
        const auto k = static_cast<std::size_t>(j - 1);
        return k < columns.fixed.size() ? columns.fixed[k] : "x" + std::to_string(j);
    };
    for (Index j = 0; j < report.beta_hat.size(); ++j)
        s.beta_hat.push_back({name_of(j), report.beta_hat[j]});
    for (Index j : report.support) s.support.push_back(name_of(j));
    s.reffects_cov_hat = rows_of(report.reffects_cov_hat);
    if (report.reffects_cov_wishart_mean) s.reffects_cov_wishart_mean = rows_of(*report.reffects_cov_wishart_mean);
    s.sigma2_hat = report.sigma2_hat;
    for (Index j = 0; j < report.lambda_means.size(); ++j)
        s.lambda_means.push_back({name_of(j + 1), report.lambda_means[j]});
    s.r_used = report.r_used;
    s.iterations = report.iterations;
    s.converged = report.converged;
    s.trace = report.trace;
    s.warnings = report.warnings;
    s.wall_seconds = report.wall_seconds;
    s.timestamp = std::move(timestamp);
    return s;
}

nlohmann::ordered_json to_json(const FitSummary& s) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["schema_version"] = s.schema_version;
    j["family"] = s.family;
    j["columns"] = oj{{"cluster", s.columns.cluster},
                      {"response", s.columns.response},
                      {"fixed", s.columns.fixed},
                      {"random", s.columns.random}};
    const auto& h = s.hyperparameters;
    j["hyperparameters"] = oj{{"S0", h.S0},
                              {"nu0", h.nu0},
                              {"r", h.r},
                              {"s", h.s},
                              {"alpha_sigma0", h.alpha_sigma0},
                              {"beta_sigma0", h.beta_sigma0},
                              {"alpha_r0", h.alpha_r0},
                              {"beta_r0", h.beta_r0},
                              {"r_mode", h.r_mode},
                              {"taylor_order", h.taylor_order},
                              {"tol", h.tol},
                              {"max_outer_iters", h.max_outer_iters},
                              {"seed", h.seed}};
    oj beta = oj::array();
    for (const auto& b : s.beta_hat) beta.push_back(oj{{"name", b.name}, {"value", b.value}});
    j["beta_hat"] = beta;
    j["support"] = s.support;
    j["reffects_cov_hat"] = s.reffects_cov_hat;
    put_optional(j, "reffects_cov_wishart_mean", s.reffects_cov_wishart_mean);
    put_optional(j, "sigma2_hat", s.sigma2_hat);
    oj lam = oj::array();
    for (const auto& l : s.lambda_means) lam.push_back(oj{{"name", l.name}, {"value", l.value}});
    j["lambda_means"] = lam;
    j["r_used"] = s.r_used;
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    oj trace = oj::array();
    for (const auto& t : s.trace)
        trace.push_back(oj{{"delta_beta", t.delta_beta}, {"objective", t.objective}});
    j["trace"] = trace;
    j["warnings"] = s.warnings;
    j["wall_seconds"] = s.wall_seconds;
    j["timestamp"] = s.timestamp;
    return j;
}

FitSummary summary_from_json(const nlohmann::json& j) {
    try {
        FitSummary s;
        s.schema_version = j.at("schema_version").get<int>();
        s.family = j.at("family").get<std::string>();
        const auto& c = j.at("columns");
        s.columns = {c.at("cluster").get<std::string>(), c.at("response").get<std::string>(),
                     c.at("fixed").get<std::vector<std::string>>(),
                     c.at("random").get<std::vector<std::string>>()};
        const auto& h = j.at("hyperparameters");
        auto& hp = s.hyperparameters;
        hp.S0 = h.at("S0").get<DenseRows>();
        hp.nu0 = h.at("nu0").get<double>();
        hp.r = h.at("r").get<double>();
        hp.s = h.at("s").get<double>();
        hp.alpha_sigma0 = h.at("alpha_sigma0").get<double>();
        hp.beta_sigma0 = h.at("beta_sigma0").get<double>();
        hp.alpha_r0 = h.at("alpha_r0").get<double>();
        hp.beta_r0 = h.at("beta_r0").get<double>();
        hp.r_mode = h.at("r_mode").get<std::string>();
        hp.taylor_order = h.at("taylor_order").get<int>();
        hp.tol = h.at("tol").get<double>();
        hp.max_outer_iters = h.at("max_outer_iters").get<int>();
        hp.seed = h.at("seed").get<std::uint64_t>();
        for (const auto& b : j.at("beta_hat"))
            s.beta_hat.push_back({b.at("name").get<std::string>(), b.at("value").get<double>()});
        s.support = j.at("support").get<std::vector<std::string>>();
        s.reffects_cov_hat = j.at("reffects_cov_hat").get<DenseRows>();
        s.reffects_cov_wishart_mean = get_optional<DenseRows>(j, "reffects_cov_wishart_mean");
        s.sigma2_hat = get_optional<double>(j, "sigma2_hat");
        for (const auto& l : j.at("lambda_means"))
            s.lambda_means.push_back({l.at("name").get<std::string>(), l.at("value").get<double>()});
        s.r_used = j.at("r_used").get<double>();
        s.iterations = j.at("iterations").get<int>();
        s.converged = j.at("converged").get<bool>();
        for (const auto& t : j.at("trace"))
            s.trace.push_back({t.at("delta_beta").get<double>(), t.at("objective").get<double>()});
        s.warnings = j.at("warnings").get<std::vector<std::string>>();
        s.wall_seconds = j.at("wall_seconds").get<double>();
        s.timestamp = j.at("timestamp").get<std::string>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorKind::ParseError, std::string("malformed fit report: ") + e.what());
    }
}

std::string human_summary(const FitSummary& s) {
    std::ostringstream os;
    char buf[160];
    os << "family: " << s.family << "  iterations: " << s.iterations
       << (s.converged ? " (converged)" : " (NOT converged)") << '\n';
    os << "selected:";
    if (s.support.empty()) os << " (none)";
    for (const auto& name : s.support) os << ' ' << name;
    os << "\ncoefficients:\n";
    for (const auto& b : s.beta_hat) {
        std::snprintf(buf, sizeof buf, "  %-20s %12.6f\n", b.name.c_str(), b.value);
        os << buf;
    }
    os << "random-effect covariance:\n";
    for (const auto& row : s.reffects_cov_hat) {
        os << ' ';
        for (double v : row) {
            std::snprintf(buf, sizeof buf, " %12.6f", v);
            os << buf;
        }
        os << '\n';
    }
    if (s.sigma2_hat) {
        std::snprintf(buf, sizeof buf, "residual variance: %.6f\n", *s.sigma2_hat);
        os << buf;
    }
    for (const auto& w : s.warnings) os << "warning: " << w << '\n';
    return os.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace vbglmm
