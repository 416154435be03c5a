#pragma once

#include "tduebo/gp.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace tduebo::acq {

struct AcqParams {
    double xi = 0.01;   // EI exploration margin
    double kappa = 2.0; // UCB confidence multiplier

    void validate() const;
};

enum class AcqMode { ucb, ei };

std::string_view to_string(AcqMode mode);

enum class ThresholdKind { relative, absolute };

ThresholdKind threshold_kind_from_string(std::string_view name);
std::string_view to_string(ThresholdKind kind);

/// State of the threshold-driven UCB→EI switch. The transition is
/// one-way: once in EI mode the state never returns to UCB.
///
/// States constructed directly in EI mode model a fixed-EI policy and
/// are simply left alone by update_policy.
struct PolicyState {
    AcqMode mode = AcqMode::ucb;
    ThresholdKind threshold_kind = ThresholdKind::relative;
    /// Fraction of the baseline if relative, the raw uncertainty
    /// threshold if absolute. Must be positive.
    double threshold_value = 0.5;
    /// Average uncertainty seen by the first monitor call.
    std::optional<double> baseline_sigma_bar;
    /// Iteration at which the UCB→EI transition fired, set at most once.
    std::optional<int> switch_iteration;
};

/// Closed-form expected improvement over f_best, maximization
/// orientation. For std == 0 this is the analytic limit
/// max(0, mean - f_best - xi).
double ei_score(double mean, double std, double f_best, double xi);

/// mean + kappa * std.
double ucb_score(double mean, double std, double kappa);

/// One monitoring step: records the baseline on the first call, then
/// fires the one-way UCB→EI switch when sigma_bar falls strictly below
/// the effective threshold. Returns the successor state.
[[nodiscard]] PolicyState update_policy(PolicyState state, double sigma_bar, int iteration);

/// Scores every pool row under the state's current acquisition mode.
Eigen::VectorXd score_candidates(const gp::GpModel& model, const Eigen::MatrixXd& pool,
                                 const PolicyState& state, const AcqParams& params, double f_best);

} // namespace tduebo::acq
