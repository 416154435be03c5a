#pragma once

#include "tduebo/acquisition.hpp"
#include "tduebo/data.hpp"
#include "tduebo/gp.hpp"
#include "tduebo/hyperopt.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tduebo::loop {

enum class Objective { minimize, maximize };
enum class PolicyKind { ei_only, ucb_only, tdue };

std::string to_string(Objective objective);
Objective objective_from_string(const std::string& text);
std::string to_string(PolicyKind kind);
PolicyKind policy_from_string(const std::string& text);

/// Everything a single campaign needs beyond its split.
struct CampaignConfig {
    int budget = 1;
    Objective objective = Objective::maximize;
    PolicyKind policy_kind = PolicyKind::tdue;
    acq::AcqParams acq_params;
    acq::ThresholdKind threshold_kind = acq::ThresholdKind::relative;
    double threshold_value = 0.5;
    bool refit_hyperparameters = true;
    std::uint64_t seed = 0;
    gp::KernelKind kernel = gp::KernelKind::matern52;
    int hyperopt_restarts = 5;
    /// Uncertainty-monitoring set; defaults to the remaining pool.
    std::optional<Eigen::MatrixXd> monitor_grid;
    /// When set, the posterior over this grid is recorded after every
    /// refit (iteration 0 = the initial fit).
    std::optional<Eigen::MatrixXd> trace_grid;
};

/// One sequential selection. Targets are stored in canonical
/// maximization space; minimization campaigns un-negate in reports.
struct IterationEntry {
    int iteration = 0;        // 1-based selection count
    Eigen::Index selected_pool_index = 0; // row in the original pool
    Eigen::VectorXd selected_input;
    double observed_target = 0.0;
    double sigma_bar = 0.0;
    acq::AcqMode mode = acq::AcqMode::ucb; // mode in force at selection time
    double best_so_far = 0.0;
};

struct PosteriorSnapshot {
    int iteration = 0; // 0 = after the initial fit
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

struct RunRecord {
    std::string dataset_name;
    PolicyKind policy_kind = PolicyKind::tdue;
    Objective objective = Objective::maximize;
    std::uint64_t seed = 0;
    std::vector<IterationEntry> entries;
    std::optional<int> switch_iteration;
    std::optional<int> iterations_to_best;
    std::uint64_t final_model_fingerprint = 0;
    bool failed = false;
    std::string failure_message;
};

struct CampaignResult {
    RunRecord record;
    std::optional<gp::GpModel> final_model;
    acq::PolicyState policy;
    std::vector<PosteriorSnapshot> snapshots; // empty unless trace_grid set
    int hyperopt_fallbacks = 0;
};

/// Fits the surrogate on the initial set and prepares the policy
/// state, recording the baseline sigma-bar over the full pool (or the
/// monitor grid when configured). Targets in `split` must already be
/// in canonical maximization space.
std::pair<gp::GpModel, acq::PolicyState> initialize(const data::CampaignSplit& split,
                                                    const CampaignConfig& config);

/// Argmax of the current acquisition over the pool rows; ties broken
/// by the lowest index.
Eigen::Index select_next(const gp::GpModel& model, const Eigen::MatrixXd& pool,
                         const acq::PolicyState& state, const acq::AcqParams& params,
                         double f_best);

/// Runs one full pool-replay campaign. Deterministic given
/// (split, config).
CampaignResult run_campaign(const data::CampaignSplit& split, const CampaignConfig& config);

} // namespace tduebo::loop
