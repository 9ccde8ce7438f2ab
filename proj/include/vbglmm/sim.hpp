#pragma once

#include "vbglmm/fit.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vbglmm {

/**
 * Simulation design: eta_ij = beta0 + x_ij' beta + z_ij' b_i with
 * beta = (3, -2.5, 0, 0, -2, 0, ..., 0), x_ij and z_ij i.i.d. U(0,1) and
 * b_i ~ N(0, sigma2 I_u).
 */
struct SimDesign {
    Family family = Family::Poisson;
    Index p = 5;
    Index m = 50;
    Index n_i = 5;
    double sigma2 = 0.5;
    Index u = 1;
    int taylor_order = 2;
    int reps = 50;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimTruth {
    VectorXd beta;
    double sigma2;
    /// Drawn random effects, one per cluster.
    std::vector<VectorXd> b;
};

struct SimData {
    Dataset data;
    SimTruth truth;
};

VectorXd true_beta(Index p);
/// Support of true_beta: {1, 4}.
std::vector<Index> true_support();

SimData generate(const SimDesign& design, std::uint64_t rep_seed);

struct RepRecord {
    bool failed = false;
    std::string error;
    bool correctly_fitted = false;
    double beta_sq_error = 0.0;
    double sigma2_sq_error = 0.0;
    double seconds = 0.0;
    int iterations = 0;
    bool converged = false;
};

RepRecord evaluate(const FitReport& fit, const SimTruth& truth);

struct SimResult {
    SimDesign design;
    int completed = 0;
    int failed = 0;
    double cfr_percent = 0.0;
    double mse_beta = 0.0;
    double mse_sigma2 = 0.0;
    double cpu_seconds = 0.0;
    std::vector<RepRecord> records;
};

/// Seed of replication `rep` of design `design_index` under `master`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t design_index, int rep);

/// Aggregate per-replication records (failed ones are excluded and counted).
SimResult aggregate(const SimDesign& design, std::vector<RepRecord> records);

/// Runs every design; replications may run on `threads` workers, results
/// do not depend on the schedule.
std::vector<SimResult> run_table(const std::vector<SimDesign>& designs, const FitConfig& cfg,
                                 unsigned threads = 1);

/// Machine-readable table, one row per design. Timing is excluded so the
/// output is reproducible byte for byte.
std::string table_csv(const std::vector<SimResult>& results);
/// Human-readable table including timing.
std::string table_text(const std::vector<SimResult>& results);

}  // namespace vbglmm
