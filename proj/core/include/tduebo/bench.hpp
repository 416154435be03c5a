#pragma once

#include "tduebo/data.hpp"
#include "tduebo/gp.hpp"
#include "tduebo/loop.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tduebo::bench {

/// Root mean square error, √(Σ(aᵢ − pᵢ)²/n).
double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// Test RMSE of a completed run: predicts the held-out targets with the
/// final surrogate. Reported in normalized target space.
double evaluate_run(const loop::RunRecord& record, const gp::GpModel& final_model,
                    const data::DataBlock& test);

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double iqr = 0.0;
};

/// Mean, median, and interquartile range. Quantiles use linear
/// interpolation between order statistics (midpoint median for even
/// counts), so cross-language recomputation agrees exactly.
SummaryStats summarize(std::vector<double> values);

/// Linear-interpolation quantile of a sorted sample, p in [0, 1].
double quantile(const std::vector<double>& sorted, double p);

/// First iteration whose selected point attains the pool-wide optimum
/// (exact match in canonical space); absent when never attained.
std::optional<int> convergence_iteration(const loop::RunRecord& record, double pool_optimum);

/// One campaign inside a benchmark, labeled for aggregation.
struct LabeledRun {
    std::string dataset;
    loop::PolicyKind policy = loop::PolicyKind::tdue;
    int repetition = 0;
    std::uint64_t split_fingerprint = 0;
    loop::RunRecord record;
    std::optional<double> rmse; // absent for failed runs
    std::vector<loop::PosteriorSnapshot> snapshots;
};

/// Aggregated statistics for one (dataset, policy) cell. Raw RMSEs are
/// stored already rounded through the 9-significant-digit report
/// precision, so statistics recomputed from the emitted files match
/// these exactly.
struct SummaryCell {
    std::string dataset;
    loop::PolicyKind policy = loop::PolicyKind::tdue;
    std::vector<double> rmses; // successful runs, repetition order
    std::optional<SummaryStats> stats;
    std::vector<std::optional<int>> iterations_to_best; // one per repetition
    std::vector<std::optional<int>> switch_iterations;  // one per repetition
    int failures = 0;
};

struct BenchmarkConfig {
    std::vector<loop::PolicyKind> policies{loop::PolicyKind::ei_only, loop::PolicyKind::ucb_only,
                                           loop::PolicyKind::tdue};
    int repetitions = 30;
    std::uint64_t base_seed = 0;
    int jobs = 0; // 0 = one worker per repetition, capped by the core count
    /// Template for every campaign; seed and budget are overwritten
    /// per repetition / per split.
    loop::CampaignConfig campaign;
};

struct BenchmarkResult {
    std::string dataset;
    data::SplitProtocol protocol;
    BenchmarkConfig config;
    std::vector<LabeledRun> runs;   // ordered by (repetition, policy)
    std::vector<SummaryCell> cells; // ordered as config.policies
};

/// Builds the repetition-r split; must be deterministic in the seed.
using SplitProvider = std::function<data::CampaignSplit(std::uint64_t seed)>;

/// Runs policies × repetitions campaigns. Repetition r derives its
/// seed from base_seed and builds one split shared by every policy
/// (paired comparison). Aggregation order is fixed by (repetition,
/// policy), independent of worker scheduling.
BenchmarkResult run_benchmark(const std::string& dataset_name, const SplitProvider& provider,
                              const BenchmarkConfig& config);

/// Tabular convenience wrapper over make_split.
BenchmarkResult run_benchmark(const data::Dataset& dataset, const data::SplitProtocol& protocol,
                              const BenchmarkConfig& config);

/// Writes the report file set into out_dir:
///   summary.json     - statistics, convergence and switch distributions
///   rmse_raw.csv     - dataset,policy,repetition,rmse
///   convergence.csv  - dataset,policy,repetition,iteration,best_so_far,mode
///   posterior_1d.csv - iteration,x,mean,std (runs that recorded traces;
///                      per-policy suffix when several policies traced)
/// All floats carry 9 significant digits.
std::vector<std::filesystem::path> emit_reports(const std::vector<BenchmarkResult>& results,
                                                const std::filesystem::path& out_dir);

/// Renders the per-dataset summary statistics as plain text for the console.
std::string format_summary_table(const std::vector<BenchmarkResult>& results);

} // namespace tduebo::bench
