#include "vbglmm/sim.hpp"

#include "vbglmm/errors.hpp"
#include "vbglmm/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace vbglmm {

void SimDesign::validate() const {
    if (family == Family::Gaussian) throw ConfigError("simulation supports poisson and binomial only");
    if (p < 4) throw ConfigError("simulation design needs p >= 4");
    if (m < 1 || n_i < 1 || u < 1) throw ConfigError("m, n_i and u must be positive");
    if (!(sigma2 >= 0.0)) throw ConfigError("sigma2 must be non-negative");
    if (reps < 1) throw ConfigError("reps must be >= 1");
}

VectorXd true_beta(Index p) {
    VectorXd beta = VectorXd::Zero(p + 1);
    beta[0] = 3.0;
    beta[1] = -2.5;
    beta[4] = -2.0;
    return beta;
}

std::vector<Index> true_support() { return {1, 4}; }

SimData generate(const SimDesign& design, std::uint64_t rep_seed) {
    design.validate();
    std::mt19937_64 engine = keyed_engine(rep_seed, {});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const Index n = design.m * design.n_i;
    const double sd = std::sqrt(design.sigma2);
    SimData out;
    out.truth = {true_beta(design.p), design.sigma2, {}};
    Dataset& d = out.data;
    d.y.resize(n);
    d.X.resize(n, design.p + 1);
    d.offsets.assign(1, 0);

    Index row = 0;
    for (Index i = 0; i < design.m; ++i) {
        VectorXd b(design.u);
        for (Index l = 0; l < design.u; ++l) b[l] = sd * normal(engine);
        MatrixXd Zi(design.n_i, design.u);
        for (Index j = 0; j < design.n_i; ++j, ++row) {
            d.X(row, 0) = 1.0;
            for (Index c = 1; c <= design.p; ++c) d.X(row, c) = unif(engine);
            for (Index l = 0; l < design.u; ++l) Zi(j, l) = unif(engine);
            const double eta = d.X.row(row).dot(out.truth.beta) + Zi.row(j).dot(b);
            if (design.family == Family::Poisson) {
                const double mean = std::exp(eta);
                if (!std::isfinite(mean) || mean > 1e9)
                    throw NumericalError(NumericalErrorKind::Overflow, "simulated Poisson mean overflows");
                std::poisson_distribution<long long> pois(mean);
                d.y[row] = static_cast<double>(pois(engine));
            } else {
                std::bernoulli_distribution bern(sigmoid(eta));
                d.y[row] = bern(engine) ? 1.0 : 0.0;
            }
        }
        d.Z.push_back(std::move(Zi));
        out.truth.b.push_back(std::move(b));
        d.offsets.push_back(row);
    }
    d = validate_dataset(std::move(d), design.family);
    return out;
}

RepRecord evaluate(const FitReport& fit, const SimTruth& truth) {
    if (fit.beta_hat.size() != truth.beta.size())
        throw ConfigError("evaluate: fitted and true coefficient lengths differ");
    RepRecord rec;
    rec.correctly_fitted = fit.support == true_support();
    rec.beta_sq_error = (fit.beta_hat - truth.beta).squaredNorm();
    const double s2 = fit.reffects_cov_hat(0, 0);
    rec.sigma2_sq_error = (s2 - truth.sigma2) * (s2 - truth.sigma2);
    rec.seconds = fit.wall_seconds;
    rec.iterations = fit.iterations;
    rec.converged = fit.converged;
    return rec;
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t design_index, int rep) {
    return splitmix64(splitmix64(master ^ splitmix64(design_index + 1)) ^
                      splitmix64(static_cast<std::uint64_t>(rep) + 0x5851f42d4c957f2dULL));
}

SimResult aggregate(const SimDesign& design, std::vector<RepRecord> records) {
    SimResult res;
    res.design = design;
    int correct = 0;
    for (const auto& r : records) {
        res.cpu_seconds += r.seconds;
        if (r.failed) {
            ++res.failed;
            continue;
        }
        ++res.completed;
        correct += r.correctly_fitted ? 1 : 0;
        res.mse_beta += r.beta_sq_error;
        res.mse_sigma2 += r.sigma2_sq_error;
    }
    if (res.completed > 0) {
        res.cfr_percent = 100.0 * correct / res.completed;
        res.mse_beta /= res.completed;
        res.mse_sigma2 /= res.completed;
    }
    res.records = std::move(records);
    return res;
}

namespace {

RepRecord run_replication(const SimDesign& design, std::uint64_t seed, const FitConfig& base) {
    RepRecord rec;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const SimData sim = generate(design, seed);
        FitConfig cfg = base;
        cfg.seed = seed;
        cfg.ff.seed = seed;
        const FamilySpec family{design.family, design.taylor_order};
        const FitReport rep = fit(sim.data, family, Hyperparams::defaults(design.u), cfg);
        rec = evaluate(rep, sim.truth);
    } catch (const Error& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

std::vector<SimResult> run_table(const std::vector<SimDesign>& designs, const FitConfig& cfg,
                                 unsigned threads) {
    std::vector<SimResult> out;
    for (std::size_t di = 0; di < designs.size(); ++di) {
        const SimDesign& design = designs[di];
        design.validate();
        std::vector<RepRecord> records(static_cast<std::size_t>(design.reps));
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int r = next++; r < design.reps; r = next++)
                records[static_cast<std::size_t>(r)] =
                    run_replication(design, replication_seed(design.seed, di, r), cfg);
        };
        const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(design.reps)));
        if (n_workers == 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        }
        out.push_back(aggregate(design, std::move(records)));
    }
    return out;
}

namespace {
std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}
}  // namespace

std::string table_csv(const std::vector<SimResult>& results) {
    std::ostringstream os;
    os << "family,p,m,n_i,sigma2,reps,failed,cfr_percent,mse_beta,mse_sigma2\n";
    for (const auto& r : results) {
        os << family_name(r.design.family) << ',' << r.design.p << ',' << r.design.m << ','
           << r.design.n_i << ',' << fmt("%.6g", r.design.sigma2) << ',' << r.design.reps << ','
           << r.failed << ',' << fmt("%.1f", r.cfr_percent) << ',' << fmt("%.6f", r.mse_beta) << ','
           << fmt("%.6f", r.mse_sigma2) << '\n';
    }
    return os.str();
}

std::string table_text(const std::vector<SimResult>& results) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-9s %4s %5s %7s %7s %10s %10s %9s %7s\n", "family", "p", "m",
                  "sigma2", "CFR(%)", "MSE_beta", "MSE_sig2", "seconds", "failed");
    os << line;
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "%-9s %4ld %5ld %7.3g %7.1f %10.4f %10.4f %9.2f %7d\n",
                      std::string(family_name(r.design.family)).c_str(), static_cast<long>(r.design.p),
                      static_cast<long>(r.design.m), r.design.sigma2, r.cfr_percent, r.mse_beta,
                      r.mse_sigma2, r.cpu_seconds, r.failed);
        os << line;
    }
    return os.str();
}

}  // namespace vbglmm
