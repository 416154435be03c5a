#include "tduebo/bench.hpp"

#include "tduebo/errors.hpp"
#include "tduebo/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace tduebo::bench {

double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    if (actual.size() != predicted.size()) {
        throw InputError("rmse: length mismatch (" + std::to_string(actual.size()) + " vs " +
                         std::to_string(predicted.size()) + ")");
    }
    if (actual.size() == 0) {
        throw InputError("rmse: empty vectors");
    }
    if (!actual.allFinite() || !predicted.allFinite()) {
        throw InputError("rmse: non-finite values");
    }
    return std::sqrt((actual - predicted).squaredNorm() / static_cast<double>(actual.size()));
}

double evaluate_run(const loop::RunRecord& record, const gp::GpModel& final_model,
                    const data::DataBlock& test) {
    if (record.failed) {
        throw InputError("cannot evaluate a failed run: " + record.failure_message);
    }
    if (test.rows() == 0) {
        throw InputError("cannot evaluate against an empty test set");
    }
    // The model predicts in canonical maximization space; comparing
    // against equally-negated targets leaves the RMSE unchanged.
    const double sign = record.objective == loop::Objective::minimize ? -1.0 : 1.0;
    const auto prediction = gp::predict(final_model, test.X);
    return rmse(sign * test.y, prediction.mean);
}

double quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) {
        throw InputError("quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError("quantile level must lie in [0, 1]");
    }
    const auto n = sorted.size();
    if (n == 1) {
        return sorted.front();
    }
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= n) {
        return sorted.back();
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SummaryStats summarize(std::vector<double> values) {
    if (values.empty()) {
        throw InputError("summarize: empty input");
    }
    SummaryStats stats;
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    stats.mean = sum / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    stats.median = quantile(values, 0.5);
    stats.iqr = quantile(values, 0.75) - quantile(values, 0.25);
    return stats;
}

std::optional<int> convergence_iteration(const loop::RunRecord& record, double pool_optimum) {
    for (const auto& entry : record.entries) {
        if (entry.observed_target == pool_optimum) {
            return entry.iteration;
        }
    }
    return std::nullopt;
}

namespace {

void validate_benchmark_config(const BenchmarkConfig& config) {
    if (config.repetitions < 1) {
        throw ConfigError("repetitions must be at least 1");
    }
    if (config.policies.empty()) {
        throw ConfigError("at least one policy must be selected");
    }
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
        for (std::size_t j = i + 1; j < config.policies.size(); ++j) {
            if (config.policies[i] == config.policies[j]) {
                throw ConfigError("duplicate policy '" + loop::to_string(config.policies[i]) + "'");
            }
        }
    }
    if (config.jobs < 0) {
        throw ConfigError("jobs must be non-negative");
    }
}

int resolve_jobs(const BenchmarkConfig& config, std::size_t total_jobs) {
    int jobs = config.jobs;
    if (jobs == 0) {
        const auto cores = std::thread::hardware_concurrency();
        jobs = std::min(config.repetitions, cores == 0 ? 1 : static_cast<int>(cores));
    }
    return std::max(1, std::min<int>(jobs, static_cast<int>(total_jobs)));
}

} // namespace

BenchmarkResult run_benchmark(const std::string& dataset_name, const SplitProvider& provider,
                              const BenchmarkConfig& config) {
    validate_benchmark_config(config);

    const auto n_reps = static_cast<std::size_t>(config.repetitions);
    const auto n_policies = config.policies.size();

    // One split per repetition, shared by every policy (paired design).
    std::vector<std::uint64_t> seeds(n_reps);
    std::vector<data::CampaignSplit> splits;
    splits.reserve(n_reps);
    for (std::size_t r = 0; r < n_reps; ++r) {
        seeds[r] = derive_seed(config.base_seed, static_cast<std::uint64_t>(r));
        splits.push_back(provider(seeds[r]));
    }

    struct Job {
        std::size_t repetition;
        std::size_t policy;
    };
    std::vector<Job> jobs;
    jobs.reserve(n_reps * n_policies);
    for (std::size_t r = 0; r < n_reps; ++r) {
        for (std::size_t p = 0; p < n_policies; ++p) {
            jobs.push_back({r, p});
        }
    }

    std::vector<LabeledRun> slots(jobs.size());
    std::vector<std::exception_ptr> job_errors(jobs.size());
    auto execute = [&](std::size_t k) {
        const auto& job = jobs[k];
        const auto& split = splits[job.repetition];
        loop::CampaignConfig campaign = config.campaign;
        campaign.policy_kind = config.policies[job.policy];
        campaign.seed = seeds[job.repetition];
        campaign.budget = split.budget;

        auto outcome = loop::run_campaign(split, campaign);
        LabeledRun& run = slots[k];
        run.dataset = dataset_name;
        run.policy = campaign.policy_kind;
        run.repetition = static_cast<int>(job.repetition);
        run.split_fingerprint = split.fingerprint();
        run.record = std::move(outcome.record);
        run.snapshots = std::move(outcome.snapshots);
        if (!run.record.failed && outcome.final_model) {
            run.rmse = evaluate_run(run.record, *outcome.final_model, split.test);
        }
    };

    const int workers = resolve_jobs(config, jobs.size());
    if (workers <= 1) {
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            execute(k); // propagate configuration bugs immediately
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const auto k = next.fetch_add(1);
                    if (k >= jobs.size()) {
                        return;
                    }
                    try {
                        execute(k);
                    } catch (...) {
                        job_errors[k] = std::current_exception();
                    }
                }
            });
        }
        for (auto& thread : pool) {
            thread.join();
        }
        for (const auto& error : job_errors) {
            if (error) {
                std::rethrow_exception(error); // first in job order
            }
        }
    }

    BenchmarkResult result;
    result.dataset = dataset_name;
    result.config = config;
    // Report the realized split shape; every repetition shares it.
    result.protocol.n_initial = static_cast<int>(splits.front().initial.rows());
    result.protocol.pool_size = static_cast<int>(splits.front().pool.rows());
    result.protocol.test_size = static_cast<int>(splits.front().test.rows());
    result.protocol.budget = splits.front().budget;
    result.runs = std::move(slots);

    // Aggregate in (policy, repetition) order, independent of worker
    // scheduling. Raw RMSEs are rounded through the report precision
    // so emitted files recompute to identical statistics.
    for (std::size_t p = 0; p < n_policies; ++p) {
        SummaryCell cell;
        cell.dataset = dataset_name;
        cell.policy = config.policies[p];
        for (std::size_t r = 0; r < n_reps; ++r) {
            const auto& run = result.runs[r * n_policies + p];
            if (run.rmse) {
                cell.rmses.push_back(round9(*run.rmse));
            } else {
                ++cell.failures;
            }
            cell.iterations_to_best.push_back(run.record.iterations_to_best);
            cell.switch_iterations.push_back(run.record.switch_iteration);
        }
        if (!cell.rmses.empty()) {
            cell.stats = summarize(cell.rmses);
        }
        result.cells.push_back(std::move(cell));
    }
    return result;
}

BenchmarkResult run_benchmark(const data::Dataset& dataset, const data::SplitProtocol& protocol,
                              const BenchmarkConfig& config) {
    auto provider = [&dataset, protocol](std::uint64_t seed) {
        return data::make_split(dataset, protocol, seed);
    };
    auto result = run_benchmark(dataset.name, provider, config);
    result.protocol = protocol;
    if (protocol.test_fraction && !result.runs.empty()) {
        // Fraction-derived protocols resolve their sizes at split
        // time; record the realized ones.
        const auto n = dataset.rows();
        result.protocol.test_size =
            static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * *protocol.test_fraction));
        result.protocol.pool_size = n - protocol.n_initial - result.protocol.test_size;
    }
    return result;
}

namespace {

std::string hex_fingerprint(std::uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

double report_best(const loop::IterationEntry& entry, loop::Objective objective) {
    return objective == loop::Objective::minimize ? -entry.best_so_far : entry.best_so_far;
}

std::ofstream open_report(const std::filesystem::path& path) {
    std::ofstream stream(path);
    if (!stream) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    return stream;
}

} // namespace

std::vector<std::filesystem::path> emit_reports(const std::vector<BenchmarkResult>& results,
                                                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    // --- rmse_raw.csv ------------------------------------------------
    {
        const auto path = out_dir / "rmse_raw.csv";
        auto stream = open_report(path);
        stream << "dataset,policy,repetition,rmse\n";
        for (const auto& result : results) {
            for (const auto& run : result.runs) {
                if (!run.rmse) {
                    continue; // failed runs appear in summary.json only
                }
                stream << run.dataset << ',' << loop::to_string(run.policy) << ','
                       << run.repetition << ',' << format_g9(*run.rmse) << '\n';
            }
        }
        written.push_back(path);
    }

    // --- convergence.csv ----------------------------------------------
    {
        const auto path = out_dir / "convergence.csv";
        auto stream = open_report(path);
        stream << "dataset,policy,repetition,iteration,best_so_far,mode\n";
        for (const auto& result : results) {
            for (const auto& run : result.runs) {
                for (const auto& entry : run.record.entries) {
                    stream << run.dataset << ',' << loop::to_string(run.policy) << ','
                           << run.repetition << ',' << entry.iteration << ','
                           << format_g9(report_best(entry, run.record.objective)) << ','
                           << acq::to_string(entry.mode) << '\n';
                }
            }
        }
        written.push_back(path);
    }

    // --- posterior traces ----------------------------------------------
    {
        struct Traced {
            const BenchmarkResult* result;
            const LabeledRun* run;
        };
        std::vector<Traced> traced;
        for (const auto& result : results) {
            for (const auto& run : result.runs) {
                if (!run.snapshots.empty() && result.config.campaign.trace_grid) {
                    traced.push_back({&result, &run});
                }
            }
        }
        std::map<loop::PolicyKind, int> per_policy;
        for (const auto& t : traced) {
            ++per_policy[t.run->policy];
        }
        for (const auto& t : traced) {
            std::string name = "posterior_1d";
            if (traced.size() > 1) {
                name += "_" + loop::to_string(t.run->policy);
                if (per_policy[t.run->policy] > 1) {
                    name += "_r" + std::to_string(t.run->repetition);
                }
            }
            const auto path = out_dir / (name + ".csv");
            auto stream = open_report(path);
            stream << "iteration,x,mean,std\n";
            const auto& grid = *t.result->config.campaign.trace_grid;
            for (const auto& snap : t.run->snapshots) {
                for (Eigen::Index i = 0; i < grid.rows(); ++i) {
                    stream << snap.iteration << ',' << format_g9(grid(i, 0)) << ','
                           << format_g9(snap.mean(i)) << ',' << format_g9(snap.std(i)) << '\n';
                }
            }
            written.push_back(path);
        }
    }

    // --- summary.json ---------------------------------------------------
    {
        nlohmann::ordered_json doc;
        doc["tool"] = "tduebo";
        doc["report"] = "benchmark summary";
        doc["rmse_space"] = "normalized target";
        doc["quantile_convention"] = "linear interpolation between order statistics";
        doc["paired_splits"] = true;
        auto datasets = nlohmann::ordered_json::array();
        for (const auto& result : results) {
            nlohmann::ordered_json block;
            block["dataset"] = result.dataset;
            block["repetitions"] = result.config.repetitions;
            block["base_seed"] = result.config.base_seed;
            block["protocol"] = {{"n_initial", result.protocol.n_initial},
                                 {"pool_size", result.protocol.pool_size},
                                 {"test_size", result.protocol.test_size},
                                 {"budget", result.protocol.budget}};
            auto fingerprints = nlohmann::ordered_json::array();
            for (std::size_t r = 0; r < result.runs.size(); r += result.config.policies.size()) {
                fingerprints.push_back(hex_fingerprint(result.runs[r].split_fingerprint));
            }
            block["split_fingerprints"] = fingerprints;
            auto policies = nlohmann::ordered_json::array();
            for (const auto& cell : result.cells) {
                nlohmann::ordered_json entry;
                entry["policy"] = loop::to_string(cell.policy);
                entry["runs"] = cell.rmses.size() + static_cast<std::size_t>(cell.failures);
                entry["failures"] = cell.failures;
                nlohmann::ordered_json stats;
                stats["raw"] = cell.rmses;
                if (cell.stats) {
                    stats["mean"] = cell.stats->mean;
                    stats["median"] = cell.stats->median;
                    stats["iqr"] = cell.stats->iqr;
                } else {
                    stats["mean"] = nullptr;
                    stats["median"] = nullptr;
                    stats["iqr"] = nullptr;
                }
                entry["rmse"] = stats;
                auto to_json_optional = [](const std::optional<int>& v) {
                    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
                };
                auto iterations = nlohmann::ordered_json::array();
                int converged = 0;
                for (const auto& v : cell.iterations_to_best) {
                    iterations.push_back(to_json_optional(v));
                    converged += v.has_value() ? 1 : 0;
                }
                entry["iterations_to_best"] = iterations;
                entry["converged_runs"] = converged;
                if (cell.policy == loop::PolicyKind::tdue) {
                    auto switches = nlohmann::ordered_json::array();
                    for (const auto& v : cell.switch_iterations) {
                        switches.push_back(to_json_optional(v));
                    }
                    entry["switch_iterations"] = switches;
                }
                policies.push_back(std::move(entry));
            }
            block["policies"] = std::move(policies);
            datasets.push_back(std::move(block));
        }
        doc["datasets"] = std::move(datasets);

        const auto path = out_dir / "summary.json";
        auto stream = open_report(path);
        stream << doc.dump(2) << '\n';
        written.push_back(path);
    }

    return written;
}

std::string format_summary_table(const std::vector<BenchmarkResult>& results) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-6s %12s %12s %12s %12s\n", "dataset", "policy",
                  "rmse mean", "median", "iqr", "converged");
    out << line;
    for (const auto& result : results) {
        for (const auto& cell : result.cells) {
            int converged = 0;
            for (const auto& v : cell.iterations_to_best) {
                converged += v.has_value() ? 1 : 0;
            }
            std::string conv = std::to_string(converged) + "/" +
                               std::to_string(cell.iterations_to_best.size());
            if (cell.stats) {
                std::snprintf(line, sizeof(line), "%-12s %-6s %12.6f %12.6f %12.6f %12s\n",
                              cell.dataset.c_str(), loop::to_string(cell.policy).c_str(),
                              cell.stats->mean, cell.stats->median, cell.stats->iqr, conv.c_str());
            } else {
                std::snprintf(line, sizeof(line), "%-12s %-6s %12s %12s %12s %12s\n",
                              cell.dataset.c_str(), loop::to_string(cell.policy).c_str(), "-", "-",
                              "-", conv.c_str());
            }
            out << line;
        }
    }
    return out.str();
}

} // namespace tduebo::bench
