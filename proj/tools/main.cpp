#include "tduebo/bench.hpp"
#include "tduebo/data.hpp"
#include "tduebo/errors.hpp"
#include "tduebo/loop.hpp"
#include "tduebo/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::ordered_json;
using namespace tduebo;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

/// Binds CLI options to config-file keys: a config value applies only
/// when the matching flag was not given (flags > config > defaults),
/// and the resolved value is echoed back for reproducibility.
class OptionRegistry {
public:
    explicit OptionRegistry(CLI::App* command) : command_(command) {}

    template <typename T>
    CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
        auto* opt = command_->add_option("--" + name, var, desc);
        entries_.push_back({name, opt,
                            [&var](const nlohmann::json& v) { var = v.get<T>(); },
                            [&var] { return ordered_json(var); }});
        return opt;
    }

    CLI::Option* add_flag(const std::string& name, bool& var, const std::string& desc) {
        auto* opt = command_->add_flag("--" + name + ",!--no-" + name, var, desc);
        entries_.push_back({name, opt,
                            [&var](const nlohmann::json& v) { var = v.get<bool>(); },
                            [&var] { return ordered_json(var); }});
        return opt;
    }

    /// Applies config-file values to options the command line left at
    /// their defaults. Unknown keys are configuration errors.
    void apply_config(const std::filesystem::path& path) {
        std::ifstream stream(path);
        if (!stream) {
            throw ConfigError("cannot open config file '" + path.string() + "'");
        }
        nlohmann::json config;
        try {
            stream >> config;
        } catch (const nlohmann::json::exception& error) {
            throw ConfigError("config file '" + path.string() + "': " + error.what());
        }
        if (!config.is_object()) {
            throw ConfigError("config file '" + path.string() + "' must hold a JSON object");
        }
        for (const auto& [key, value] : config.items()) {
            auto* entry = find(key);
            if (entry == nullptr) {
                throw ConfigError("config file '" + path.string() + "': unknown key '" + key + "'");
            }
            if (entry->option->count() > 0) {
                continue; // an explicit flag outranks the config file
            }
            try {
                entry->apply(value);
            } catch (const nlohmann::json::exception&) {
                throw ConfigError("config file '" + path.string() + "': bad value for '" + key + "'");
            }
        }
    }

    /// The fully resolved configuration, defaults included.
    ordered_json effective() const {
        ordered_json result;
        for (const auto& entry : entries_) {
            result[entry.name] = entry.dump();
        }
        return result;
    }

private:
    struct Entry {
        std::string name;
        CLI::Option* option;
        std::function<void(const nlohmann::json&)> apply;
        std::function<ordered_json()> dump;
    };

    Entry* find(const std::string& name) {
        for (auto& entry : entries_) {
            if (entry.name == name) {
                return &entry;
            }
        }
        return nullptr;
    }

    CLI::App* command_;
    std::vector<Entry> entries_;
};

/// Options shared by the bench and demo1d commands.
struct CampaignOptions {
    std::string policies = "ei,ucb,tdue";
    std::uint64_t seed = 0;
    double xi = 0.01;
    double kappa = 2.0;
    std::string threshold_kind = "relative";
    double threshold = 0.5;
    std::string kernel = "matern52";
    bool refit = true;
    int restarts = 5;
    int jobs = 0;
    std::string out;
    std::string config_file;
};

void register_campaign_options(OptionRegistry& reg, CampaignOptions& opts) {
    reg.add("policies", opts.policies, "Comma-separated policies to run (ei, ucb, tdue)");
    reg.add("seed", opts.seed, "Base seed for all derived random streams");
    reg.add("xi", opts.xi, "EI exploration margin");
    reg.add("kappa", opts.kappa, "UCB exploration weight");
    reg.add("threshold-kind", opts.threshold_kind,
            "Uncertainty threshold interpretation: relative or absolute");
    reg.add("threshold", opts.threshold,
            "Switch threshold (fraction of the baseline sigma-bar when relative)");
    reg.add("kernel", opts.kernel, "Kernel: matern52 or se (alias squared_exponential)");
    reg.add_flag("refit", opts.refit, "Re-optimize hyperparameters every iteration");
    reg.add("restarts", opts.restarts, "Hyperparameter-search restarts per refit");
    reg.add("jobs", opts.jobs, "Worker threads (0 = repetitions capped by cores)");
    reg.add("out", opts.out, "Output directory (default: $TDUEBO_OUTPUT_ROOT/<command>)");
    reg.add("config", opts.config_file, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
}

std::vector<loop::PolicyKind> parse_policies(const std::string& text) {
    std::vector<loop::PolicyKind> policies;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto token = text.substr(start, comma == std::string::npos ? comma : comma - start);
        if (!token.empty()) {
            policies.push_back(loop::policy_from_string(token));
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    if (policies.empty()) {
        throw ConfigError("no policies selected");
    }
    return policies;
}

std::filesystem::path resolve_out_dir(const std::string& flag_value, const std::string& command) {
    if (!flag_value.empty()) {
        return flag_value;
    }
    const char* root = std::getenv("TDUEBO_OUTPUT_ROOT");
    return std::filesystem::path(root != nullptr ? root : "tduebo_out") / command;
}

void fill_campaign(loop::CampaignConfig& campaign, const CampaignOptions& opts) {
    campaign.acq_params.xi = opts.xi;
    campaign.acq_params.kappa = opts.kappa;
    campaign.threshold_kind = acq::threshold_kind_from_string(opts.threshold_kind);
    campaign.threshold_value = opts.threshold;
    campaign.kernel = gp::kernel_kind_from_string(opts.kernel);
    campaign.refit_hyperparameters = opts.refit;
    campaign.hyperopt_restarts = opts.restarts;
}

void echo_config(const ordered_json& effective, const std::filesystem::path& out_dir) {
    std::cout << "effective config:\n" << effective.dump(2) << "\n";
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / "config.json";
    std::ofstream stream(path);
    if (!stream) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    stream << effective.dump(2) << '\n';
}

/// A dataset argument: CSV path with an optional =protocol suffix
/// naming one of the built-in campaign layouts.
struct DatasetSpec {
    std::filesystem::path path;
    std::optional<std::string> protocol_name;
};

DatasetSpec parse_dataset_spec(const std::string& text) {
    const auto eq = text.rfind('=');
    if (eq == std::string::npos) {
        return {text, std::nullopt};
    }
    const auto name = text.substr(eq + 1);
    if (!data::builtin_protocols().count(name)) {
        std::string known;
        for (const auto& [key, value] : data::builtin_protocols()) {
            known += known.empty() ? key : ", " + key;
        }
        throw ConfigError("unknown protocol '" + name + "' (built-in: " + known + ")");
    }
    return {text.substr(0, eq), name};
}

/// Protocol-shaping flags for datasets without a built-in suffix.
struct ProtocolOptions {
    int initial = 0;
    int pool = 0;
    int test = 0;
    double test_fraction = 0.0;
    int budget = 0;
};

void register_protocol_options(OptionRegistry& reg, ProtocolOptions& opts) {
    reg.add("initial", opts.initial, "Initial-fit rows for datasets without =protocol");
    reg.add("pool", opts.pool, "Candidate-pool rows for datasets without =protocol");
    reg.add("test", opts.test, "Held-out test rows for datasets without =protocol");
    reg.add("test-fraction", opts.test_fraction,
            "Derive the test size from the row count instead of --pool/--test");
    reg.add("budget", opts.budget, "Sequential selections per campaign");
}

data::SplitProtocol resolve_protocol(const DatasetSpec& spec, const ProtocolOptions& opts) {
    if (spec.protocol_name) {
        return data::builtin_protocols().at(*spec.protocol_name);
    }
    data::SplitProtocol protocol;
    protocol.n_initial = opts.initial;
    protocol.budget = opts.budget;
    if (opts.test_fraction > 0.0) {
        protocol.test_fraction = opts.test_fraction;
    } else {
        protocol.pool_size = opts.pool;
        protocol.test_size = opts.test;
    }
    if (protocol.n_initial <= 0 || protocol.budget <= 0) {
        throw ConfigError("dataset '" + spec.path.string() +
                          "' has no protocol: pass path=<builtin> or --initial/--budget "
                          "with --pool/--test or --test-fraction");
    }
    return protocol;
}

// ----------------------------------------------------------------- bench

int cmd_bench(const CampaignOptions& campaign_opts, const ProtocolOptions& protocol_opts,
              const std::vector<std::string>& dataset_args, const std::string& target,
              const std::string& objective, int reps, const ordered_json& effective) {
    if (dataset_args.empty()) {
        throw ConfigError("bench needs at least one --dataset");
    }
    const auto out_dir = resolve_out_dir(campaign_opts.out, "bench");
    echo_config(effective, out_dir);

    bench::BenchmarkConfig config;
    config.policies = parse_policies(campaign_opts.policies);
    config.repetitions = reps;
    config.base_seed = campaign_opts.seed;
    config.jobs = campaign_opts.jobs;
    fill_campaign(config.campaign, campaign_opts);
    config.campaign.objective = loop::objective_from_string(objective);

    std::vector<bench::BenchmarkResult> results;
    for (const auto& arg : dataset_args) {
        const auto spec = parse_dataset_spec(arg);
        const auto protocol = resolve_protocol(spec, protocol_opts);
        const auto dataset = data::load_csv(spec.path, {target, ""});
        results.push_back(bench::run_benchmark(dataset, protocol, config));
    }

    const auto files = bench::emit_reports(results, out_dir);
    std::cout << bench::format_summary_table(results);
    for (const auto& file : files) {
        std::cout << "wrote " << file.string() << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- demo1d

int cmd_demo1d(const CampaignOptions& campaign_opts, double noise, int budget, int grid,
               int test_grid, const ordered_json& effective) {
    const auto out_dir = resolve_out_dir(campaign_opts.out, "demo1d");
    echo_config(effective, out_dir);

    bench::BenchmarkConfig config;
    config.policies = parse_policies(campaign_opts.policies);
    config.repetitions = 1;
    config.base_seed = campaign_opts.seed;
    config.jobs = campaign_opts.jobs;
    fill_campaign(config.campaign, campaign_opts);
    config.campaign.objective = loop::Objective::maximize;

    auto provider = [&](std::uint64_t seed) {
        return data::make_1d_split(grid, seed, noise, budget, test_grid);
    };
    // The posterior is traced over the noiseless reference grid, which
    // is identical for every seed.
    config.campaign.trace_grid = provider(0).test.X;

    const auto result = bench::run_benchmark("synth1d", provider, config);
    std::vector<bench::BenchmarkResult> results{result};
    results.front().protocol = {2, grid, test_grid, budget, std::nullopt};

    const auto files = bench::emit_reports(results, out_dir);
    std::cout << bench::format_summary_table(results);
    for (const auto& file : files) {
        std::cout << "wrote " << file.string() << "\n";
    }
    return kExitOk;
}

// -------------------------------------------------------------- validate

int cmd_validate(const ProtocolOptions& protocol_opts, const std::vector<std::string>& dataset_args,
                 const std::string& target, const ordered_json& effective) {
    if (dataset_args.empty()) {
        throw ConfigError("validate needs at least one --dataset");
    }
    std::cout << "effective config:\n" << effective.dump(2) << "\n";

    bool all_valid = true;
    for (const auto& arg : dataset_args) {
        const auto spec = parse_dataset_spec(arg);
        const auto issues = data::scan_csv(spec.path, {target, ""});
        if (!issues.empty()) {
            all_valid = false;
            for (const auto& issue : issues) {
                std::cout << spec.path.string();
                if (issue.line > 0) {
                    std::cout << ":" << issue.line;
                }
                std::cout << ": " << issue.message << "\n";
            }
            continue;
        }
        const auto dataset = data::load_csv(spec.path, {target, ""});
        std::cout << spec.path.string() << ": valid, n=" << dataset.rows()
                  << ", d=" << dataset.dims() << ", target '" << target << "'\n";

        std::optional<data::SplitProtocol> protocol;
        try {
            protocol = resolve_protocol(spec, protocol_opts);
        } catch (const ConfigError&) {
            std::cout << "  (no protocol given; schema checks only)\n";
        }
        if (protocol) {
            const auto expected = protocol->test_fraction
                                      ? dataset.rows()
                                      : protocol->n_initial + protocol->pool_size + protocol->test_size;
            if (protocol->test_fraction) {
                const auto test = static_cast<Eigen::Index>(
                    std::llround(static_cast<double>(dataset.rows()) * *protocol->test_fraction));
                std::cout << "  protocol ok: initial=" << protocol->n_initial
                          << ", pool=" << dataset.rows() - protocol->n_initial - test
                          << ", test=" << test << " (fraction-derived), budget=" << protocol->budget
                          << "\n";
            } else if (expected == dataset.rows()) {
                std::cout << "  protocol ok: initial=" << protocol->n_initial
                          << ", pool=" << protocol->pool_size << ", test=" << protocol->test_size
                          << ", budget=" << protocol->budget << "\n";
            } else {
                all_valid = false;
                std::cout << "  protocol mismatch: dataset has " << dataset.rows()
                          << " rows but the protocol partitions " << expected
                          << " (initial=" << protocol->n_initial << ", pool=" << protocol->pool_size
                          << ", test=" << protocol->test_size
                          << "); pass --test-fraction to derive sizes from the row count\n";
            }
        }
    }
    return all_valid ? kExitOk : kExitData;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold-driven UCB-to-EI Bayesian-optimization toolkit"};
    app.require_subcommand(1);

    // --- bench -----------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "Replay pool-based campaigns over CSV datasets");
    OptionRegistry bench_reg(bench_cmd);
    CampaignOptions bench_campaign;
    ProtocolOptions bench_protocol;
    std::vector<std::string> bench_datasets;
    std::string bench_target = "y";
    std::string bench_objective = "minimize";
    int bench_reps = 30;
    bench_reg.add("dataset", bench_datasets,
                  "CSV path, optionally path=<builtin protocol>; repeatable");
    bench_reg.add("target", bench_target, "Name of the target column");
    bench_reg.add("objective", bench_objective, "minimize or maximize the target");
    bench_reg.add("reps", bench_reps, "Seeded repetitions per dataset");
    register_protocol_options(bench_reg, bench_protocol);
    register_campaign_options(bench_reg, bench_campaign);

    // --- demo1d ----------------------------------------------------------
    auto* demo_cmd = app.add_subcommand("demo1d", "Run the built-in 1-D illustrative experiment");
    OptionRegistry demo_reg(demo_cmd);
    CampaignOptions demo_campaign;
    double demo_noise = 0.2;
    int demo_budget = 11;
    int demo_grid = 61;
    int demo_test_grid = 300;
    demo_reg.add("noise", demo_noise, "Observation noise std of the synthetic objective");
    demo_reg.add("budget", demo_budget, "Sequential selections");
    demo_reg.add("grid", demo_grid, "Candidate-pool grid size over [-1, 2]");
    demo_reg.add("test-grid", demo_test_grid, "Noiseless evaluation grid size");
    register_campaign_options(demo_reg, demo_campaign);

    // --- validate ----------------------------------------------------------
    auto* validate_cmd = app.add_subcommand("validate", "Check dataset files and protocol sizes");
    OptionRegistry validate_reg(validate_cmd);
    ProtocolOptions validate_protocol;
    std::vector<std::string> validate_datasets;
    std::string validate_target = "y";
    std::string validate_config_file;
    validate_reg.add("dataset", validate_datasets,
                     "CSV path, optionally path=<builtin protocol>; repeatable");
    validate_reg.add("target", validate_target, "Name of the target column");
    register_protocol_options(validate_reg, validate_protocol);
    validate_reg.add("config", validate_config_file, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (bench_cmd->parsed()) {
            if (!bench_campaign.config_file.empty()) {
                bench_reg.apply_config(bench_campaign.config_file);
            }
            auto effective = bench_reg.effective();
            effective["command"] = "bench";
            return cmd_bench(bench_campaign, bench_protocol, bench_datasets, bench_target,
                             bench_objective, bench_reps, effective);
        }
        if (demo_cmd->parsed()) {
            if (!demo_campaign.config_file.empty()) {
                demo_reg.apply_config(demo_campaign.config_file);
            }
            auto effective = demo_reg.effective();
            effective["command"] = "demo1d";
            return cmd_demo1d(demo_campaign, demo_noise, demo_budget, demo_grid, demo_test_grid,
                              effective);
        }
        if (validate_cmd->parsed()) {
            if (!validate_config_file.empty()) {
                validate_reg.apply_config(validate_config_file);
            }
            auto effective = validate_reg.effective();
            effective["command"] = "validate";
            return cmd_validate(validate_protocol, validate_datasets, validate_target, effective);
        }
    } catch (const NumericalError& error) {
        std::cerr << "numerical error: " << error.what() << "\n";
        return kExitNumerical;
    } catch (const DataError& error) {
        std::cerr << "data error: " << error.what() << "\n";
        return kExitData;
    } catch (const ConfigError& error) {
        std::cerr << "config error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const Error& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
