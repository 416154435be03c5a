#include "tduebo/bench.hpp"
#include "tduebo/errors.hpp"
#include "tduebo/util.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

using namespace tduebo;
using namespace tduebo::bench;
using testsupport::TempDir;
using testsupport::contains;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v(i++) = x;
    }
    return v;
}

BenchmarkResult tiny_benchmark(int repetitions = 3) {
    BenchmarkConfig config;
    config.repetitions = repetitions;
    config.base_seed = 404;
    config.jobs = 1;
    config.campaign.budget = 4;
    const SplitProvider provider = [](std::uint64_t seed) {
        return data::make_1d_split(13, seed, 0.2, 4);
    };
    return run_benchmark("tiny1d", provider, config);
}

/// R-7 quantile recomputation, written independently of the library.
double q7(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const double h = static_cast<double>(xs.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo]);
}

} // namespace

TEST_CASE("rmse matches hand-computed references") {
    CHECK(rmse(vec({0.0, 0.0}), vec({3.0, 4.0})) ==
          doctest::Approx(3.5355339059327378).epsilon(1e-15));
    CHECK(rmse(vec({1.0, 2.0, 3.0}), vec({1.0, 2.0, 3.0})) == 0.0);
    CHECK(rmse(vec({1.0}), vec({-1.0})) == 2.0);
}

TEST_CASE("rmse validates its inputs") {
    CHECK_THROWS_AS((void)rmse(vec({1.0, 2.0}), vec({1.0})), InputError);
    CHECK_THROWS_AS((void)rmse(Eigen::VectorXd(), Eigen::VectorXd()), InputError);
    CHECK_THROWS_AS((void)rmse(vec({std::nan("")}), vec({1.0})), InputError);
}

TEST_CASE("summarize matches the fixed quantile convention") {
    const SummaryStats four = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(four.mean == 2.5);
    CHECK(four.median == 2.5);
    CHECK(four.iqr == doctest::Approx(1.5).epsilon(1e-15));

    // Independent recomputation on an odd-length sample.
    const std::vector<double> sample{0.31, 0.12, 0.55, 0.40, 0.23};
    const SummaryStats s = summarize(sample);
    CHECK(s.mean == doctest::Approx(0.322).epsilon(1e-15));
    CHECK(s.median == doctest::Approx(0.31).epsilon(1e-15));
    CHECK(s.iqr == doctest::Approx(0.17).epsilon(1e-12));

    // Order must not matter.
    const SummaryStats shuffled = summarize({0.55, 0.12, 0.40, 0.23, 0.31});
    CHECK(shuffled.median == s.median);
    CHECK(shuffled.iqr == s.iqr);
}

TEST_CASE("quantile interpolates linearly between order statistics") {
    const std::vector<double> sorted{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile(sorted, 0.0) == 1.0);
    CHECK(quantile(sorted, 1.0) == 4.0);
    CHECK(quantile(sorted, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(quantile(sorted, 0.75) == doctest::Approx(3.25).epsilon(1e-15));
    CHECK(quantile({5.0}, 0.5) == 5.0);
}

TEST_CASE("convergence_iteration finds the first optimal selection") {
    loop::RunRecord record;
    for (int i = 1; i <= 4; ++i) {
        loop::IterationEntry e;
        e.iteration = i;
        e.observed_target = (i == 3) ? 1.5 : 0.5;
        record.entries.push_back(e);
    }
    CHECK(convergence_iteration(record, 1.5) == 3);
    CHECK_FALSE(convergence_iteration(record, 2.0).has_value());
}

TEST_CASE("evaluate_run scores the final model on the held-out block") {
    const data::CampaignSplit split = data::make_1d_split(13, 55, 0.2, 4);
    loop::CampaignConfig config;
    config.budget = 4;
    config.policy_kind = loop::PolicyKind::tdue;
    const loop::CampaignResult run = loop::run_campaign(split, config);
    REQUIRE(run.final_model.has_value());

    const double score = evaluate_run(run.record, *run.final_model, split.test);
    const gp::Prediction p = gp::predict(*run.final_model, split.test.X);
    CHECK(score == doctest::Approx(rmse(split.test.y, p.mean)).epsilon(1e-14));

    loop::RunRecord failed = run.record;
    failed.failed = true;
    CHECK_THROWS_AS((void)evaluate_run(failed, *run.final_model, split.test), InputError);
}

TEST_CASE("benchmarks pair one split per repetition across policies") {
    const BenchmarkResult result = tiny_benchmark();
    REQUIRE(result.runs.size() == 9); // 3 repetitions x 3 policies

    for (int r = 0; r < 3; ++r) {
        const std::uint64_t fp = result.runs[static_cast<std::size_t>(r) * 3].split_fingerprint;
        for (int p = 0; p < 3; ++p) {
            const LabeledRun& run = result.runs[static_cast<std::size_t>(r) * 3 + p];
            CHECK(run.repetition == r);
            CHECK(run.policy == result.config.policies[static_cast<std::size_t>(p)]);
            CHECK(run.split_fingerprint == fp);
        }
    }
    // Different repetitions draw different splits.
    CHECK(result.runs[0].split_fingerprint != result.runs[3].split_fingerprint);

    REQUIRE(result.cells.size() == 3);
    for (const SummaryCell& cell : result.cells) {
        CHECK(cell.rmses.size() == 3);
        CHECK(cell.failures == 0);
        REQUIRE(cell.stats.has_value());
        // Raw values are stored pre-rounded through the report precision.
        for (double v : cell.rmses) {
            CHECK(v == round9(v));
        }
    }
}

TEST_CASE("worker count does not affect benchmark results") {
    BenchmarkConfig config;
    config.repetitions = 2;
    config.base_seed = 7;
    config.campaign.budget = 3;
    const SplitProvider provider = [](std::uint64_t seed) {
        return data::make_1d_split(13, seed, 0.2, 3);
    };

    config.jobs = 1;
    const BenchmarkResult serial = run_benchmark("tiny1d", provider, config);
    config.jobs = 4;
    const BenchmarkResult threaded = run_benchmark("tiny1d", provider, config);

    REQUIRE(serial.runs.size() == threaded.runs.size());
    for (std::size_t i = 0; i < serial.runs.size(); ++i) {
        REQUIRE(serial.runs[i].rmse.has_value());
        REQUIRE(threaded.runs[i].rmse.has_value());
        CHECK(*serial.runs[i].rmse == *threaded.runs[i].rmse);
        CHECK(serial.runs[i].record.final_model_fingerprint ==
              threaded.runs[i].record.final_model_fingerprint);
    }
}

TEST_CASE("emitted reports have the published layout") {
    const BenchmarkResult result = tiny_benchmark(2);
    TempDir dir("reports");
    const auto files = emit_reports({result}, dir.path());

    REQUIRE(std::filesystem::exists(dir / "rmse_raw.csv"));
    REQUIRE(std::filesystem::exists(dir / "convergence.csv"));
    REQUIRE(std::filesystem::exists(dir / "summary.json"));
    CHECK(files.size() >= 3);

    std::ifstream raw(dir / "rmse_raw.csv");
    std::string header;
    std::getline(raw, header);
    CHECK(header == "dataset,policy,repetition,rmse");
    int raw_rows = 0;
    for (std::string line; std::getline(raw, line) && !line.empty();) {
        ++raw_rows;
        CHECK(contains(line, "tiny1d,"));
    }
    CHECK(raw_rows == 6); // 2 repetitions x 3 policies

    std::ifstream conv(dir / "convergence.csv");
    std::getline(conv, header);
    CHECK(header == "dataset,policy,repetition,iteration,best_so_far,mode");
    int conv_rows = 0;
    for (std::string line; std::getline(conv, line) && !line.empty();) {
        ++conv_rows;
    }
    CHECK(conv_rows == 6 * 4); // budget 4 per campaign
}

TEST_CASE("summary statistics recompute exactly from the raw CSV values") {
    const BenchmarkResult result = tiny_benchmark(4);
    TempDir dir("recompute");
    (void)emit_reports({result}, dir.path());

    // Collect rmse_raw.csv values per policy.
    std::map<std::string, std::vector<double>> raw;
    std::ifstream in(dir / "rmse_raw.csv");
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string dataset, policy, rep, value;
        std::getline(ss, dataset, ',');
        std::getline(ss, policy, ',');
        std::getline(ss, rep, ',');
        std::getline(ss, value, ',');
        raw[policy].push_back(std::stod(value));
    }
    REQUIRE(raw.size() == 3);

    nlohmann::json summary;
    std::ifstream(dir / "summary.json") >> summary;
    REQUIRE(summary["datasets"].size() == 1);
    const auto& block = summary["datasets"][0];
    CHECK(block["dataset"] == "tiny1d");
    const auto find_policy = [&](const std::string& name) {
        for (const auto& entry : block["policies"]) {
            if (entry["policy"] == name) {
                return entry;
            }
        }
        FAIL("policy not found in summary: ", name);
        return block["policies"][0];
    };
    for (const auto& [policy, values] : raw) {
        REQUIRE(values.size() == 4);
        const auto cell = find_policy(policy)["rmse"];
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        CHECK(std::abs(cell["mean"].get<double>() - mean) <= 1e-12);
        CHECK(std::abs(cell["median"].get<double>() - q7(values, 0.5)) <= 1e-12);
        CHECK(std::abs(cell["iqr"].get<double>() - (q7(values, 0.75) - q7(values, 0.25))) <=
              1e-12);
        // The JSON raw array round-trips to the exact CSV doubles.
        const auto json_raw = cell["raw"].get<std::vector<double>>();
        REQUIRE(json_raw.size() == values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            CHECK(json_raw[i] == values[i]);
        }
    }
}

TEST_CASE("posterior traces are emitted when a campaign records them") {
    BenchmarkConfig config;
    config.repetitions = 1;
    config.base_seed = 12;
    config.policies = {loop::PolicyKind::tdue};
    config.campaign.budget = 3;
    Eigen::MatrixXd grid(21, 1);
    for (int i = 0; i < 21; ++i) {
        grid(i, 0) = -1.0 + 3.0 * i / 20.0;
    }
    config.campaign.trace_grid = grid;
    const SplitProvider provider = [](std::uint64_t seed) {
        return data::make_1d_split(13, seed, 0.2, 3);
    };
    const BenchmarkResult result = run_benchmark("traced", provider, config);

    TempDir dir("trace");
    (void)emit_reports({result}, dir.path());
    REQUIRE(std::filesystem::exists(dir / "posterior_1d.csv"));

    std::ifstream in(dir / "posterior_1d.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,x,mean,std");
    int rows = 0;
    for (std::string line; std::getline(in, line) && !line.empty();) {
        ++rows;
    }
    CHECK(rows == 21 * 4); // snapshots at iterations 0..3
}

TEST_CASE("the console table mentions every policy and dataset") {
    const BenchmarkResult result = tiny_benchmark(2);
    const std::string table = format_summary_table({result});
    CHECK(contains(table, "tiny1d"));
    CHECK(contains(table, "ei"));
    CHECK(contains(table, "ucb"));
    CHECK(contains(table, "tdue"));
}

TEST_CASE("benchmark configuration is validated") {
    BenchmarkConfig config;
    config.repetitions = 0;
    const SplitProvider provider = [](std::uint64_t seed) {
        return data::make_1d_split(13, seed, 0.2, 3);
    };
    CHECK_THROWS_AS((void)run_benchmark("bad", provider, config), Error);
}
