#include "vbglmm/cli.hpp"

#include "vbglmm/csv.hpp"
#include "vbglmm/errors.hpp"
#include "vbglmm/fit.hpp"
#include "vbglmm/report.hpp"
#include "vbglmm/sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace vbglmm {

namespace {

struct FitOptions {
    std::string data;
    std::string family;
    std::string cluster;
    std::string response;
    std::vector<std::string> fixed;
    std::vector<std::string> random;
    double tol = 1e-5;
    int max_iter = 200;
    std::string r_mode = "fixed:0";
    double s = 1e-5;
    int taylor_k = 2;
    std::uint64_t seed = 1;
    std::string out;
};

struct SimulateOptions {
    std::string family;
    long p = 5;
    long m = 50;
    double sigma2 = 0.5;
    long ni = 5;
    long u = 1;
    int reps = 50;
    std::uint64_t seed = 1;
    std::string r_mode = "eb";
    int taylor_k = 2;
    unsigned threads = 1;
    std::string out;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(DataErrorKind::EmptyFile, "cannot write '" + path + "'");
    f << content;
    if (!f) throw DataError(DataErrorKind::EmptyFile, "failed writing '" + path + "'");
}

int run_fit(const FitOptions& o, std::ostream& out) {
    const FamilySpec family{parse_family(o.family), o.taylor_k};
    family.validate();
    const CsvSchema schema{o.cluster, o.response, o.fixed, o.random};
    const Dataset data = load_csv(o.data, schema, family.kind);

    Hyperparams hyper = Hyperparams::defaults(data.u());
    hyper.s = o.s;
    FitConfig cfg;
    cfg.tol = o.tol;
    cfg.max_outer_iters = o.max_iter;
    cfg.r_mode = RMode::parse(o.r_mode);
    if (cfg.r_mode.kind == RMode::Kind::Fixed) hyper.r = cfg.r_mode.value;
    cfg.seed = o.seed;
    cfg.ff.seed = o.seed;

    const FitReport report = fit(data, family, hyper, cfg);
    ReportColumns cols{o.cluster, o.response, o.fixed, o.random};
    if (cols.random.empty()) cols.random.push_back(kInterceptName);
    const FitSummary summary = summarize(report, cols, family, hyper, cfg, utc_timestamp());
    if (!o.out.empty()) write_file(o.out, to_json(summary).dump(2) + "\n");
    out << human_summary(summary);
    if (o.out.empty()) out << to_json(summary).dump(2) << '\n';
    return kExitOk;
}

int run_simulate(const SimulateOptions& o, std::ostream& out) {
    SimDesign design;
    design.family = parse_family(o.family);
    if (design.family == Family::Gaussian)
        throw ConfigError("simulate supports --family poisson|binomial");
    design.p = o.p;
    design.m = o.m;
    design.n_i = o.ni;
    design.u = o.u;
    design.sigma2 = o.sigma2;
    design.reps = o.reps;
    design.seed = o.seed;
    design.taylor_order = o.taylor_k;
    design.validate();

    FitConfig cfg;
    cfg.r_mode = RMode::parse(o.r_mode);
    cfg.seed = o.seed;
    const auto results = run_table({design}, cfg, o.threads);
    if (!o.out.empty()) write_file(o.out, table_csv(results));
    out << table_text(results);
    if (o.out.empty()) out << table_csv(results);
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Variable selection in generalized linear mixed models (adaptive Lasso, variational Bayes)",
                 "vbglmm"};
    app.require_subcommand(1);

    FitOptions fo;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV file and write a JSON report");
    fit_cmd->add_option("--data", fo.data, "input CSV")->required();
    fit_cmd->add_option("--family", fo.family, "gaussian|poisson|binomial")->required();
    fit_cmd->add_option("--cluster", fo.cluster, "cluster column")->required();
    fit_cmd->add_option("--response", fo.response, "response column")->required();
    fit_cmd->add_option("--fixed", fo.fixed, "fixed-effect columns")->delimiter(',')->required();
    fit_cmd->add_option("--random", fo.random, "random-effect columns (default: random intercept)")
        ->delimiter(',');
    fit_cmd->add_option("--tol", fo.tol, "outer convergence tolerance")->capture_default_str();
    fit_cmd->add_option("--max-iter", fo.max_iter, "maximum outer iterations")->capture_default_str();
    fit_cmd->add_option("--r", fo.r_mode, "fixed:<value> or eb")->capture_default_str();
    fit_cmd->add_option("--s", fo.s, "Gamma rate of the lambda priors")->capture_default_str();
    fit_cmd->add_option("--taylor-k", fo.taylor_k, "Taylor order for binomial (even)")->capture_default_str();
    fit_cmd->add_option("--seed", fo.seed, "RNG seed")->capture_default_str();
    fit_cmd->add_option("--out", fo.out, "JSON report path");

    SimulateOptions so;
    auto* sim_cmd = app.add_subcommand("simulate", "run the simulation study for one design");
    sim_cmd->add_option("--family", so.family, "poisson|binomial")->required();
    sim_cmd->add_option("--p", so.p, "number of candidate covariates")->required();
    sim_cmd->add_option("--m", so.m, "number of clusters")->required();
    sim_cmd->add_option("--sigma2", so.sigma2, "random-effect variance")->required();
    sim_cmd->add_option("--ni", so.ni, "observations per cluster")->capture_default_str();
    sim_cmd->add_option("--u", so.u, "random-effect dimension")->capture_default_str();
    sim_cmd->add_option("--reps", so.reps, "replications")->capture_default_str();
    sim_cmd->add_option("--seed", so.seed, "master seed")->capture_default_str();
    sim_cmd->add_option("--r", so.r_mode, "fixed:<value> or eb")->capture_default_str();
    sim_cmd->add_option("--taylor-k", so.taylor_k, "Taylor order for binomial (even)")->capture_default_str();
    sim_cmd->add_option("--threads", so.threads, "worker threads for replications")->capture_default_str();
    sim_cmd->add_option("--out", so.out, "CSV table path");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << "usage: vbglmm fit --data <csv> --family gaussian|poisson|binomial ... | vbglmm simulate ...\n";
        return kExitUsage;
    }

    try {
        if (fit_cmd->parsed()) return run_fit(fo, out);
        return run_simulate(so, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        err << "usage: vbglmm fit --data <csv> --family gaussian|poisson|binomial ... | vbglmm simulate ...\n";
        return kExitUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace vbglmm
