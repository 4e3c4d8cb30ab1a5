#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ebvi/cavi.hpp"
#include "ebvi/dataset.hpp"
#include "ebvi/mcmc.hpp"
#include "ebvi/metrics.hpp"
#include "ebvi/pilot.hpp"
#include "ebvi/posterior.hpp"

namespace ebvi::bench {

enum class Method { EbVi, EbMcmc, Pilot };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct Preset {
    std::string id;
    SimScenario scenario;
};

/// test1..test5, the eight table2 cells and the four dtable cells.
const std::vector<Preset>& presets();
std::optional<SimScenario> find_preset(const std::string& id);

struct PilotSettings {
    int folds = 5;
    int grid_size = 50;
    double grid_ratio = 0.01;
    double jitter_scale = 0.01;
    bool relaxed = true;  // unpenalized refit on the selected lasso support
    double max_support_fraction = 0.1;
};

/// Pilot fit under the harness settings, before jitter.
pilot::PilotEstimate fit_pilot(const Dataset& d, const PilotSettings& ps, Rng& fold_rng);

struct ExperimentSpec {
    std::string scenario_id = "custom";
    SimScenario scenario;
    std::vector<Method> methods{Method::EbVi};
    int replications = 1;
    std::uint64_t seed = 0;
    HyperParams hyper;
    cavi::CaviConfig cavi;
    mcmc::ChainConfig chain;
    PilotSettings pilot;
    int workers = 0;  // 0 means available hardware parallelism

    void validate() const;
};

struct MethodRecord {
    Method method = Method::EbVi;
    Vector scores;  // phi_hat, chain inclusion, or pilot coefficients before jitter
    Configuration s_hat;
    metrics::ConfusionCounts confusion;
    std::optional<double> tpr;
    double fdr = 0.0;
    std::optional<double> tnr;
    double mcc = 0.0;
    double wall_time_s = 0.0;
    int sweeps = 0;             // ebvi only
    double accept_rate = 0.0;   // ebmcmc only
    double lambda_used = 0.0;   // pilot-backed methods
    std::string error;          // non-empty when this method failed
};

struct ReplicationRecord {
    int rep = 0;
    std::uint64_t seed = 0;
    std::vector<MethodRecord> methods;
    std::string error;
};

struct Summary {
    double mean = 0.0;  // NaN when no replication defines the metric
    double sd = 0.0;
};

struct Aggregate {
    Method method = Method::EbVi;
    int rep_count = 0;
    Summary tpr, fdr, tnr, mcc;
    double time_mean_s = 0.0;
};

struct RunResult {
    std::string scenario_id;
    std::vector<Method> methods;
    std::vector<ReplicationRecord> reps;
    std::vector<Aggregate> aggregates;
};

/// Independent random streams derived from one replication seed.
enum class Stream : std::uint64_t { Data = 1, Folds = 2, Jitter = 3, Chain = 4 };
Rng stream(std::uint64_t rep_seed, Stream s);

/// Seed of one replication: a hash of (master seed, scenario id, index).
std::uint64_t replication_seed(std::uint64_t master, const std::string& scenario_id, int rep);

/// Recomputes aggregates from the per-replication records, in `methods` order.
std::vector<Aggregate> aggregate(const std::vector<ReplicationRecord>& reps,
                                 const std::vector<Method>& methods);

/// One replication of the pipeline on freshly simulated data.
ReplicationRecord run_replication(const ExperimentSpec& spec, int rep);

RunResult run_experiment(const ExperimentSpec& spec);

struct Comparison {
    double d = 0.0;
    Matrix phi_runs;  // successful replications only
    Matrix pi_runs;
    RunResult run;
};

/// EB-VI against EB-MCMC on identical data, summarized by the D distance.
Comparison compare_vi_mcmc(ExperimentSpec spec);

struct EmitOptions {
    bool include_timing = true;
};

std::string aggregate_csv(const std::vector<RunResult>& results, const EmitOptions& opts = {});

/// Writes <stem>.csv and/or <stem>.json under `format` in {csv, json, both}.
std::vector<std::filesystem::path> emit(const std::vector<RunResult>& results,
                                        const std::string& format,
                                        const std::filesystem::path& path,
                                        const EmitOptions& opts = {});

}  // namespace ebvi::bench
