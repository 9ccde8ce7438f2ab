#include "vbglmm/model.hpp"

#include "vbglmm/errors.hpp"
#include "vbglmm/special_functions.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace vbglmm {

namespace {
// exp overflows past this argument
constexpr double kMaxExpArg = 709.0;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double checked_exp(double eta) {
    if (!std::isfinite(eta) || eta > kMaxExpArg) {
        std::ostringstream msg;
        msg << "exp(" << eta << ") overflows";
        throw NumericalError(NumericalErrorKind::Overflow, msg.str());
    }
    return std::exp(eta);
}
}  // namespace

std::string_view family_name(Family family) {
    switch (family) {
        case Family::Gaussian: return "gaussian";
        case Family::Poisson: return "poisson";
        case Family::BernoulliLogit: return "binomial";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    const std::string s = lower(name);
    if (s == "gaussian" || s == "normal") return Family::Gaussian;
    if (s == "poisson") return Family::Poisson;
    if (s == "binomial" || s == "bernoulli" || s == "logistic") return Family::BernoulliLogit;
    throw ConfigError("unknown family '" + std::string(name) + "' (expected gaussian|poisson|binomial)");
}

void FamilySpec::validate() const {
    if (kind == Family::BernoulliLogit && (taylor_order < 2 || taylor_order % 2 != 0))
        throw ConfigError("Taylor order K must be an even integer >= 2");
}

double zeta(double eta, Family family) {
    switch (family) {
        case Family::Gaussian: return 0.5 * eta * eta;
        case Family::Poisson: return checked_exp(eta);
        case Family::BernoulliLogit: return log1pexp(eta);
    }
    return 0.0;
}

double zeta_dot(double eta, Family family) {
    switch (family) {
        case Family::Gaussian: return eta;
        case Family::Poisson: return checked_exp(eta);
        case Family::BernoulliLogit: return sigmoid(eta);
    }
    return 0.0;
}

double zeta_ddot(double eta, Family family) {
    switch (family) {
        case Family::Gaussian: return 1.0;
        case Family::Poisson: return checked_exp(eta);
        case Family::BernoulliLogit: {
            const double p = sigmoid(eta);
            return p * (1.0 - p);
        }
    }
    return 0.0;
}

Dataset group_by_cluster(const VectorXd& y, const MatrixXd& X, const MatrixXd& Z,
                         const std::vector<std::string>& cluster_of_row, Family family) {
    const Index n = y.size();
    if (X.rows() != n || Z.rows() != n || static_cast<Index>(cluster_of_row.size()) != n) {
        std::ostringstream msg;
        msg << "row count mismatch: y has " << n << ", X has " << X.rows() << ", Z has " << Z.rows()
            << ", cluster column has " << cluster_of_row.size();
        throw DataError(DataErrorKind::DimensionMismatch, msg.str());
    }

    std::unordered_map<std::string, Index> index_of;
    std::vector<std::string> labels;
    std::vector<std::vector<Index>> rows;
    for (Index k = 0; k < n; ++k) {
        const auto& label = cluster_of_row[static_cast<std::size_t>(k)];
        auto [it, inserted] = index_of.try_emplace(label, static_cast<Index>(labels.size()));
        if (inserted) {
            labels.push_back(label);
            rows.emplace_back();
        }
        rows[static_cast<std::size_t>(it->second)].push_back(k);
    }

    Dataset d;
    d.y.resize(n);
    d.X.resize(n, X.cols());
    d.offsets.assign(1, 0);
    d.cluster_labels = labels;
    Index out = 0;
    for (const auto& members : rows) {
        MatrixXd Zi(static_cast<Index>(members.size()), Z.cols());
        Index local = 0;
        for (Index k : members) {
            d.y[out] = y[k];
            d.X.row(out) = X.row(k);
            Zi.row(local++) = Z.row(k);
            ++out;
        }
        d.Z.push_back(std::move(Zi));
        d.offsets.push_back(out);
    }
    return validate_dataset(std::move(d), family);
}

Dataset validate_dataset(Dataset raw, Family family) {
    const Index n = raw.y.size();
    const Index m = raw.m();
    if (raw.X.rows() != n)
        throw DataError(DataErrorKind::DimensionMismatch, "X row count differs from length of y");
    if (raw.X.cols() < 1)
        throw DataError(DataErrorKind::MissingIntercept, "X has no columns (intercept required)");
    if (static_cast<Index>(raw.offsets.size()) != m + 1 || raw.offsets.front() != 0 ||
        raw.offsets.back() != n)
        throw DataError(DataErrorKind::DimensionMismatch, "cluster offsets do not partition the rows");
    if (m == 0) throw DataError(DataErrorKind::EmptyCluster, "dataset has no clusters");

    const Index u = raw.Z.front().cols();
    for (Index i = 0; i < m; ++i) {
        const Index ni = raw.offsets[i + 1] - raw.offsets[i];
        if (ni <= 0) {
            throw DataError(DataErrorKind::EmptyCluster,
                            "cluster " + std::to_string(i) + " has no observations");
        }
        if (raw.Z[i].rows() != ni || raw.Z[i].cols() != u) {
            throw DataError(DataErrorKind::DimensionMismatch,
                            "Z block of cluster " + std::to_string(i) + " has wrong shape");
        }
        if (!raw.Z[i].allFinite())
            throw DataError(DataErrorKind::NonFinite, "non-finite value in Z");
    }
    if (u < 1) throw DataError(DataErrorKind::DimensionMismatch, "random-effect dimension u is 0");
    if (!raw.X.allFinite()) throw DataError(DataErrorKind::NonFinite, "non-finite value in X");
    if (!raw.y.allFinite()) throw DataError(DataErrorKind::NonFinite, "non-finite response");

    for (Index k = 0; k < n; ++k) {
        if (raw.X(k, 0) != 1.0) {
            throw DataError(DataErrorKind::MissingIntercept,
                            "X column 0 must be all ones (row " + std::to_string(k) + ")");
        }
        const double yk = raw.y[k];
        if (family == Family::BernoulliLogit && yk != 0.0 && yk != 1.0) {
            throw DataError(DataErrorKind::InvalidResponse,
                            "binomial response must be 0 or 1 (row " + std::to_string(k) + ")");
        }
        if (family == Family::Poisson && (yk < 0.0 || yk != std::floor(yk))) {
            throw DataError(DataErrorKind::InvalidResponse,
                            "Poisson response must be a non-negative integer (row " +
                                std::to_string(k) + ")");
        }
    }
    if (raw.cluster_labels.size() != static_cast<std::size_t>(m)) {
        raw.cluster_labels.clear();
        for (Index i = 0; i < m; ++i) raw.cluster_labels.push_back(std::to_string(i));
    }
    return raw;
}

Hyperparams Hyperparams::defaults(Index u) {
    Hyperparams h;
    h.S0 = 1e4 * MatrixXd::Identity(u, u);
    h.nu0 = static_cast<double>(u) + 1.0;
    return h;
}

void Hyperparams::validate() const {
    const Index u = S0.rows();
    if (u == 0 || S0.cols() != u) throw ConfigError("S0 must be a non-empty square matrix");
    if (!S0.isApprox(S0.transpose())) throw ConfigError("S0 must be symmetric");
    if (Eigen::LLT<MatrixXd>(S0).info() != Eigen::Success)
        throw ConfigError("S0 must be positive definite");
    if (!(nu0 > static_cast<double>(u) - 1.0)) throw ConfigError("nu0 must exceed u - 1");
    if (!(s > 0.0)) throw ConfigError("s must be positive");
    if (!(r >= 0.0)) throw ConfigError("r must be non-negative");
    if (!(alpha_sigma0 >= 0.0 && beta_sigma0 >= 0.0))
        throw ConfigError("inverse-Gamma prior parameters must be non-negative");
    if (!(alpha_r0 > 0.0 && beta_r0 > 0.0)) throw ConfigError("Gamma prior on r must be positive");
}

double VBState::log_lambda_mean(Index j) const {
    return digamma(lambda_shape[j]) - std::log(lambda_rate[j]);
}

}  // namespace vbglmm
