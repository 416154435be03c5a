#include "tduebo/data.hpp"
#include "tduebo/errors.hpp"
#include "tduebo/loop.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <set>

using namespace tduebo;
using namespace tduebo::loop;

namespace {

CampaignConfig quick_config(PolicyKind policy, int budget) {
    CampaignConfig config;
    config.policy_kind = policy;
    config.budget = budget;
    config.seed = 5;
    return config;
}

Eigen::MatrixXd grid1d(double lo, double hi, int n) {
    Eigen::MatrixXd g(n, 1);
    for (int i = 0; i < n; ++i) {
        g(i, 0) = lo + (hi - lo) * i / (n - 1);
    }
    return g;
}

} // namespace

TEST_CASE("campaigns are deterministic given split and config") {
    const data::CampaignSplit split = data::make_1d_split(13, 21);
    const CampaignConfig config = quick_config(PolicyKind::tdue, 5);
    const CampaignResult a = run_campaign(split, config);
    const CampaignResult b = run_campaign(split, config);

    REQUIRE(a.record.entries.size() == b.record.entries.size());
    for (std::size_t i = 0; i < a.record.entries.size(); ++i) {
        CHECK(a.record.entries[i].selected_pool_index == b.record.entries[i].selected_pool_index);
        CHECK(a.record.entries[i].observed_target == b.record.entries[i].observed_target);
        CHECK(a.record.entries[i].sigma_bar == b.record.entries[i].sigma_bar);
    }
    CHECK(a.record.final_model_fingerprint == b.record.final_model_fingerprint);
}

TEST_CASE("a campaign runs exactly budget iterations with unique selections") {
    const data::CampaignSplit split = data::make_1d_split(13, 3);
    const CampaignConfig config = quick_config(PolicyKind::tdue, 6);
    const CampaignResult result = run_campaign(split, config);

    REQUIRE_FALSE(result.record.failed);
    REQUIRE(result.record.entries.size() == 6);
    std::set<Eigen::Index> picked;
    for (std::size_t i = 0; i < result.record.entries.size(); ++i) {
        const IterationEntry& e = result.record.entries[i];
        CHECK(e.iteration == static_cast<int>(i) + 1);
        CHECK(e.selected_pool_index >= 0);
        CHECK(e.selected_pool_index < split.pool.rows());
        picked.insert(e.selected_pool_index);
        // The recorded input is the pool row it claims to be.
        CHECK(e.selected_input(0) == split.pool.X(e.selected_pool_index, 0));
        // The observed target replays the stored pool value.
        CHECK(e.observed_target == split.pool.y(e.selected_pool_index));
    }
    CHECK(picked.size() == 6);
    REQUIRE(result.final_model.has_value());
    CHECK(result.final_model->size() == split.initial.rows() + 6);
    CHECK(result.record.final_model_fingerprint == result.final_model->fingerprint());
}

TEST_CASE("best_so_far is the running maximum of observations") {
    const data::CampaignSplit split = data::make_1d_split(15, 8);
    const CampaignResult result = run_campaign(split, quick_config(PolicyKind::ei_only, 7));
    double best = -std::numeric_limits<double>::infinity();
    for (const IterationEntry& e : result.record.entries) {
        best = std::max(best, e.observed_target);
        CHECK(e.best_so_far == best);
    }
}

TEST_CASE("fixed-policy campaigns never switch") {
    const data::CampaignSplit split = data::make_1d_split(13, 11);

    const CampaignResult ei = run_campaign(split, quick_config(PolicyKind::ei_only, 5));
    CHECK_FALSE(ei.record.switch_iteration.has_value());
    for (const IterationEntry& e : ei.record.entries) {
        CHECK(e.mode == acq::AcqMode::ei);
    }

    const CampaignResult ucb = run_campaign(split, quick_config(PolicyKind::ucb_only, 5));
    CHECK_FALSE(ucb.record.switch_iteration.has_value());
    for (const IterationEntry& e : ucb.record.entries) {
        CHECK(e.mode == acq::AcqMode::ucb);
    }
}

TEST_CASE("TDUE runs match UCB-only runs up to and including the switch") {
    int switches_seen = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const data::CampaignSplit split = data::make_1d_split(61, seed);
        CampaignConfig config = quick_config(PolicyKind::tdue, 11);
        config.seed = 17;
        const CampaignResult tdue = run_campaign(split, config);
        config.policy_kind = PolicyKind::ucb_only;
        const CampaignResult ucb = run_campaign(split, config);

        const int prefix = tdue.record.switch_iteration
                               ? *tdue.record.switch_iteration
                               : static_cast<int>(tdue.record.entries.size());
        for (int i = 0; i < prefix; ++i) {
            REQUIRE(tdue.record.entries[i].selected_pool_index ==
                    ucb.record.entries[i].selected_pool_index);
        }
        if (tdue.record.switch_iteration) {
            ++switches_seen;
            // After the switch the policy states disagree.
            for (std::size_t i = static_cast<std::size_t>(prefix); i < tdue.record.entries.size();
                 ++i) {
                CHECK(tdue.record.entries[i].mode == acq::AcqMode::ei);
            }
        }
    }
    // With the published settings a substantial share of seeds switch.
    CHECK(switches_seen >= 1);
}

TEST_CASE("minimization stores canonical targets and is equivalent to negation") {
    const data::Dataset ds = data::make_synthetic_dataset(40, 2, 77, "forty");
    const data::SplitProtocol protocol{8, 22, 10, 5, std::nullopt};
    const data::CampaignSplit split = data::make_split(ds, protocol, 31);

    CampaignConfig config = quick_config(PolicyKind::tdue, 5);
    config.objective = Objective::minimize;
    const CampaignResult result = run_campaign(split, config);

    REQUIRE_FALSE(result.record.failed);
    CHECK(result.record.objective == Objective::minimize);
    for (const IterationEntry& e : result.record.entries) {
        CHECK(e.observed_target == -split.pool.y(e.selected_pool_index));
    }

    // A maximization campaign on the negated split selects the same rows.
    data::CampaignSplit negated = split;
    negated.initial.y = -negated.initial.y;
    negated.pool.y = -negated.pool.y;
    CampaignConfig max_config = config;
    max_config.objective = Objective::maximize;
    const CampaignResult mirrored = run_campaign(negated, max_config);
    REQUIRE(mirrored.record.entries.size() == result.record.entries.size());
    for (std::size_t i = 0; i < result.record.entries.size(); ++i) {
        CHECK(mirrored.record.entries[i].selected_pool_index ==
              result.record.entries[i].selected_pool_index);
    }
}

TEST_CASE("iterations_to_best marks the first arrival at the pool optimum") {
    const data::CampaignSplit split = data::make_1d_split(13, 4);
    const CampaignResult result = run_campaign(split, quick_config(PolicyKind::ucb_only, 13));

    // The whole pool is consumed, so the optimum is certainly reached.
    const double pool_max = split.pool.y.maxCoeff();
    REQUIRE(result.record.iterations_to_best.has_value());
    const int t = *result.record.iterations_to_best;
    CHECK(result.record.entries[t - 1].observed_target == pool_max);
    for (int i = 0; i < t - 1; ++i) {
        CHECK(result.record.entries[i].observed_target < pool_max);
    }
}

TEST_CASE("exhausting the pool yields the zero sigma-bar sentinel") {
    const data::CampaignSplit split = data::make_1d_split(13, 9);
    const CampaignResult result = run_campaign(split, quick_config(PolicyKind::tdue, 13));
    REQUIRE(result.record.entries.size() == 13);
    CHECK(result.record.entries.back().sigma_bar == 0.0);
    // Earlier iterations monitored a non-empty pool.
    for (std::size_t i = 0; i + 1 < result.record.entries.size(); ++i) {
        CHECK(result.record.entries[i].sigma_bar > 0.0);
    }
}

TEST_CASE("frozen hyperparameters make sigma-bar non-increasing on a fixed grid") {
    const data::CampaignSplit split = data::make_1d_split(31, 12);
    CampaignConfig config = quick_config(PolicyKind::ucb_only, 10);
    config.refit_hyperparameters = false;
    config.monitor_grid = grid1d(-1.0, 2.0, 40);
    const CampaignResult result = run_campaign(split, config);

    REQUIRE_FALSE(result.record.failed);
    double last = std::numeric_limits<double>::infinity();
    for (const IterationEntry& e : result.record.entries) {
        CHECK(e.sigma_bar <= last + 1e-10);
        last = e.sigma_bar;
    }
}

TEST_CASE("initialize records the baseline uncertainty") {
    const data::CampaignSplit split = data::make_1d_split(21, 2);
    CampaignConfig config = quick_config(PolicyKind::tdue, 3);
    const auto [model, state] = initialize(split, config);

    REQUIRE(state.baseline_sigma_bar.has_value());
    CHECK(*state.baseline_sigma_bar ==
          doctest::Approx(gp::average_uncertainty(model, split.pool.X)).epsilon(1e-14));
    CHECK(state.mode == acq::AcqMode::ucb);
    CHECK(model.size() == 2);

    config.policy_kind = PolicyKind::ei_only;
    const auto [em, es] = initialize(split, config);
    CHECK(es.mode == acq::AcqMode::ei);
    (void)em;
}

TEST_CASE("select_next breaks ties at the lowest pool index") {
    Eigen::MatrixXd X(3, 1);
    X << 0.0, 0.5, 1.0;
    Eigen::VectorXd y(3);
    y << 0.1, 0.4, -0.2;
    gp::HyperParams h;
    h.length_scales = Eigen::VectorXd::Constant(1, 0.8);
    h.signal_variance = 1.0;
    h.noise_variance = 0.05;
    const gp::GpModel model = gp::fit(X, y, h, y.mean());

    Eigen::MatrixXd pool(4, 1);
    pool << 0.25, 1.8, 1.8, 1.8; // rows 1-3 identical, far from data (max UCB)
    acq::PolicyState state;
    state.mode = acq::AcqMode::ucb;
    const Eigen::Index pick = select_next(model, pool, state, acq::AcqParams{}, y.maxCoeff());
    CHECK(pick == 1);
}

TEST_CASE("posterior traces record the initial fit plus one snapshot per iteration") {
    const data::CampaignSplit split = data::make_1d_split(13, 8);
    CampaignConfig config = quick_config(PolicyKind::tdue, 4);
    config.trace_grid = grid1d(-1.0, 2.0, 25);
    const CampaignResult result = run_campaign(split, config);

    REQUIRE(result.snapshots.size() == 5);
    for (std::size_t i = 0; i < result.snapshots.size(); ++i) {
        CHECK(result.snapshots[i].iteration == static_cast<int>(i));
        CHECK(result.snapshots[i].mean.size() == 25);
        CHECK(result.snapshots[i].std.size() == 25);
        CHECK(result.snapshots[i].std.minCoeff() >= 0.0);
    }
}

TEST_CASE("campaign configuration is validated up front") {
    const data::CampaignSplit split = data::make_1d_split(13, 1);

    CampaignConfig config = quick_config(PolicyKind::tdue, 0);
    CHECK_THROWS_AS((void)run_campaign(split, config), ConfigError);

    config = quick_config(PolicyKind::tdue, 14); // pool only has 13
    CHECK_THROWS_AS((void)run_campaign(split, config), ConfigError);

    config = quick_config(PolicyKind::tdue, 3);
    config.threshold_value = 0.0;
    CHECK_THROWS_AS((void)run_campaign(split, config), ConfigError);

    config = quick_config(PolicyKind::tdue, 3);
    config.hyperopt_restarts = 0;
    CHECK_THROWS_AS((void)run_campaign(split, config), ConfigError);

    config = quick_config(PolicyKind::tdue, 3);
    config.monitor_grid = Eigen::MatrixXd::Zero(4, 2); // wrong width
    CHECK_THROWS_AS((void)run_campaign(split, config), ConfigError);

    config = quick_config(PolicyKind::tdue, 3);
    config.acq_params.kappa = -2.0;
    CHECK_THROWS_AS((void)run_campaign(split, config), Error);
}

TEST_CASE("policy and objective names round-trip") {
    CHECK(policy_from_string("ei") == PolicyKind::ei_only);
    CHECK(policy_from_string("ucb") == PolicyKind::ucb_only);
    CHECK(policy_from_string("tdue") == PolicyKind::tdue);
    CHECK(to_string(PolicyKind::ei_only) == "ei");
    CHECK(to_string(PolicyKind::ucb_only) == "ucb");
    CHECK(to_string(PolicyKind::tdue) == "tdue");
    CHECK_THROWS_AS((void)policy_from_string("thompson"), ConfigError);

    CHECK(objective_from_string("minimize") == Objective::minimize);
    CHECK(objective_from_string("maximize") == Objective::maximize);
    CHECK(to_string(Objective::minimize) == "minimize");
    CHECK(to_string(Objective::maximize) == "maximize");
    CHECK_THROWS_AS((void)objective_from_string("sideways"), ConfigError);
}

TEST_CASE("run records carry their identifying metadata") {
    const data::CampaignSplit split = data::make_1d_split(13, 6);
    CampaignConfig config = quick_config(PolicyKind::ei_only, 3);
    config.seed = 123;
    const CampaignResult result = run_campaign(split, config);
    CHECK(result.record.dataset_name == split.dataset_name);
    CHECK(result.record.policy_kind == PolicyKind::ei_only);
    CHECK(result.record.seed == 123);
    CHECK(result.record.objective == Objective::maximize);
}
