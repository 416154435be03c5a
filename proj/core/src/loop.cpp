#include "tduebo/loop.hpp"

#include "tduebo/errors.hpp"
#include "tduebo/util.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace tduebo::loop {

std::string to_string(Objective objective) {
    return objective == Objective::minimize ? "minimize" : "maximize";
}

Objective objective_from_string(const std::string& text) {
    if (text == "minimize") {
        return Objective::minimize;
    }
    if (text == "maximize") {
        return Objective::maximize;
    }
    throw ConfigError("unknown objective '" + text + "' (expected minimize or maximize)");
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::ei_only:
        return "ei";
    case PolicyKind::ucb_only:
        return "ucb";
    case PolicyKind::tdue:
        return "tdue";
    }
    throw InputError("unhandled policy kind");
}

PolicyKind policy_from_string(const std::string& text) {
    if (text == "ei") {
        return PolicyKind::ei_only;
    }
    if (text == "ucb") {
        return PolicyKind::ucb_only;
    }
    if (text == "tdue") {
        return PolicyKind::tdue;
    }
    throw ConfigError("unknown policy '" + text + "' (expected ei, ucb, or tdue)");
}

namespace {

void validate_config(const data::CampaignSplit& split, const CampaignConfig& config) {
    if (split.initial.rows() < 1) {
        throw InputError("campaign needs a non-empty initial set");
    }
    if (config.budget < 1) {
        throw ConfigError("budget must be at least 1");
    }
    if (config.budget > split.pool.rows()) {
        throw ConfigError("budget " + std::to_string(config.budget) + " exceeds pool size " +
                          std::to_string(split.pool.rows()));
    }
    config.acq_params.validate();
    if (!(config.threshold_value > 0.0) || !std::isfinite(config.threshold_value)) {
        throw ConfigError("threshold value must be finite and positive");
    }
    if (config.hyperopt_restarts < 1) {
        throw ConfigError("hyperparameter restarts must be at least 1");
    }
    if (config.monitor_grid && config.monitor_grid->cols() != split.initial.X.cols()) {
        throw ConfigError("monitor grid dimension does not match the dataset");
    }
    if (config.trace_grid && config.trace_grid->cols() != split.initial.X.cols()) {
        throw ConfigError("trace grid dimension does not match the dataset");
    }
}

/// Minimization campaigns run in negated-target space so the engine
/// always maximizes.
double canonical_sign(Objective objective) {
    return objective == Objective::minimize ? -1.0 : 1.0;
}

struct RefitOutcome {
    gp::GpModel model;
    bool fell_back = false;
};

/// Unit-scale hyperparameters used before any marginal-likelihood
/// evidence is available. With min-max features and a standardized
/// target these sit in the middle of the search box.
gp::HyperParams default_hypers(Eigen::Index dims) {
    return {Eigen::VectorXd::Ones(dims), 1.0, 1e-2};
}

/// Refits the surrogate on the current training set. `iteration` keys
/// the seed stream so repeated runs are bit-identical; the previous
/// hyperparameters warm-start the search (and are reused verbatim when
/// re-optimization is disabled).
RefitOutcome refit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const CampaignConfig& config, int iteration,
                   const std::optional<gp::HyperParams>& previous, bool optimize) {
    const double mean_const = y.mean();
    if (!optimize) {
        const gp::HyperParams hyper = previous ? *previous : default_hypers(X.cols());
        return {gp::fit(X, y, hyper, mean_const, config.kernel), false};
    }
    gp::SearchConfig search;
    search.restarts = config.hyperopt_restarts;
    search.seed = derive_seed(config.seed, static_cast<std::uint64_t>(iteration));
    search.kind = config.kernel;
    search.init = previous;
    const auto result = gp::optimize_hyperparameters(X, y, search);
    return {gp::fit(X, y, result.hyper, mean_const, config.kernel), result.fell_back};
}

acq::PolicyState make_policy_state(const CampaignConfig& config) {
    acq::PolicyState state;
    state.threshold_kind = config.threshold_kind;
    state.threshold_value = config.threshold_value;
    switch (config.policy_kind) {
    case PolicyKind::ei_only:
        state.mode = acq::AcqMode::ei;
        break;
    case PolicyKind::ucb_only:
    case PolicyKind::tdue:
        state.mode = acq::AcqMode::ucb;
        break;
    }
    return state;
}

} // namespace

std::pair<gp::GpModel, acq::PolicyState> initialize(const data::CampaignSplit& split,
                                                    const CampaignConfig& config) {
    validate_config(split, config);
    const double sign = canonical_sign(config.objective);
    const Eigen::VectorXd y0 = sign * split.initial.y;

    // The initial fit uses unit-scale hyperparameters when per-iteration
    // re-optimization is on: marginal likelihood on a handful of points is
    // dominated by degenerate optima (an uncorrelated fit of the centered
    // targets), and the first in-loop refit re-optimizes anyway. Frozen
    // campaigns optimize here, once, since it is their only opportunity.
    auto [model, fell_back] = refit(split.initial.X, y0, config, 0, std::nullopt,
                                    !config.refit_hyperparameters);
    (void)fell_back;

    auto state = make_policy_state(config);
    const Eigen::MatrixXd& monitor =
        config.monitor_grid ? *config.monitor_grid : split.pool.X;
    const double baseline = gp::average_uncertainty(model, monitor);
    if (config.policy_kind == PolicyKind::tdue) {
        state = acq::update_policy(state, baseline, 0);
    } else {
        state.baseline_sigma_bar = baseline;
    }
    return {std::move(model), state};
}

Eigen::Index select_next(const gp::GpModel& model, const Eigen::MatrixXd& pool,
                         const acq::PolicyState& state, const acq::AcqParams& params,
                         double f_best) {
    if (pool.rows() == 0) {
        throw InputError("cannot select from an empty pool");
    }
    const Eigen::VectorXd scores = acq::score_candidates(model, pool, state, params, f_best);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
        if (scores(i) > scores(best)) { // strict: ties keep the lowest index
            best = i;
        }
    }
    return best;
}

CampaignResult run_campaign(const data::CampaignSplit& split, const CampaignConfig& config) {
    validate_config(split, config);
    const double sign = canonical_sign(config.objective);

    CampaignResult result;
    auto& record = result.record;
    record.dataset_name = split.dataset_name;
    record.policy_kind = config.policy_kind;
    record.objective = config.objective;
    record.seed = config.seed;

    // Training set, canonical targets.
    Eigen::MatrixXd train_X = split.initial.X;
    Eigen::VectorXd train_y = sign * split.initial.y;

    // Remaining pool with its original row positions.
    Eigen::MatrixXd pool_X = split.pool.X;
    Eigen::VectorXd pool_y = sign * split.pool.y;
    std::vector<Eigen::Index> pool_ids(static_cast<std::size_t>(pool_X.rows()));
    for (std::size_t i = 0; i < pool_ids.size(); ++i) {
        pool_ids[i] = static_cast<Eigen::Index>(i);
    }
    const double pool_optimum = pool_y.maxCoeff();

    gp::GpModel model;
    acq::PolicyState state = make_policy_state(config);
    try {
        auto [initial_model, initial_state] = initialize(split, config);
        model = std::move(initial_model);
        state = initial_state;
    } catch (const NumericalError& error) {
        record.failed = true;
        record.failure_message = error.what();
        result.policy = state;
        return result;
    }

    auto snapshot = [&](int iteration) {
        if (!config.trace_grid) {
            return;
        }
        const auto prediction = gp::predict(model, *config.trace_grid);
        PosteriorSnapshot snap;
        snap.iteration = iteration;
        snap.mean = prediction.mean;
        snap.std = prediction.variance.array().sqrt();
        result.snapshots.push_back(std::move(snap));
    };
    snapshot(0);

    double f_best = train_y.maxCoeff();
    // The convergence trace tracks selected observations only, so it can
    // reach the pool optimum even when an initial point exceeds it.
    double selected_best = -std::numeric_limits<double>::infinity();
    bool completed = true;
    for (int t = 1; t <= config.budget; ++t) {
        IterationEntry entry;
        entry.iteration = t;
        entry.mode = state.mode;
        try {
            // Score and select from the remaining pool.
            const Eigen::Index local = select_next(model, pool_X, state, config.acq_params, f_best);
            entry.selected_pool_index = pool_ids[static_cast<std::size_t>(local)];
            entry.selected_input = pool_X.row(local).transpose();
            entry.observed_target = pool_y(local); // pool replay reveals the stored target

            // Move the revealed point into the training set.
            train_X.conservativeResize(train_X.rows() + 1, Eigen::NoChange);
            train_X.row(train_X.rows() - 1) = pool_X.row(local);
            train_y.conservativeResize(train_y.size() + 1);
            train_y(train_y.size() - 1) = entry.observed_target;
            f_best = std::max(f_best, entry.observed_target);
            selected_best = std::max(selected_best, entry.observed_target);
            entry.best_so_far = selected_best;

            // Stable removal keeps the pool in original order, so the
            // lowest-index tiebreak stays reproducible.
            Eigen::MatrixXd next_pool(pool_X.rows() - 1, pool_X.cols());
            Eigen::VectorXd next_y(pool_y.size() - 1);
            Eigen::Index w = 0;
            for (Eigen::Index i = 0; i < pool_y.size(); ++i) {
                if (i == local) {
                    continue;
                }
                next_pool.row(w) = pool_X.row(i);
                next_y(w) = pool_y(i);
                ++w;
            }
            pool_X = std::move(next_pool);
            pool_y = std::move(next_y);
            pool_ids.erase(pool_ids.begin() + static_cast<std::ptrdiff_t>(local));

            // Refit with the newest observation, then monitor.
            auto outcome = refit(train_X, train_y, config, t, model.hyper(),
                                 config.refit_hyperparameters);
            model = std::move(outcome.model);
            if (outcome.fell_back) {
                ++result.hyperopt_fallbacks;
            }

            if (config.monitor_grid) {
                entry.sigma_bar = gp::average_uncertainty(model, *config.monitor_grid);
            } else if (pool_X.rows() > 0) {
                entry.sigma_bar = gp::average_uncertainty(model, pool_X);
            } else {
                entry.sigma_bar = 0.0; // exhausted pool: nothing left to monitor
            }
            const bool monitored = config.monitor_grid || pool_X.rows() > 0;
            if (config.policy_kind == PolicyKind::tdue && monitored) {
                state = acq::update_policy(state, entry.sigma_bar, t);
            }
        } catch (const NumericalError& error) {
            record.failed = true;
            record.failure_message = error.what();
            completed = false;
            break;
        }
        record.entries.push_back(std::move(entry));
        snapshot(t);
    }

    record.switch_iteration = state.switch_iteration;
    for (const auto& entry : record.entries) {
        if (entry.observed_target == pool_optimum) {
            record.iterations_to_best = entry.iteration;
            break;
        }
    }
    record.final_model_fingerprint = model.fingerprint();
    result.policy = state;
    if (completed) {
        result.final_model = std::move(model);
    }
    return result;
}

} // namespace tduebo::loop
