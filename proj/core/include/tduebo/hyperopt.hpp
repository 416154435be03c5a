#pragma once

#include "tduebo/gp.hpp"
#include "tduebo/kernel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace tduebo::gp {

/// Box constraints for the log-space search, expressed in natural
/// units. Defaults assume normalized data (features in [0,1], target
/// standardized).
struct SearchBounds {
    double length_scale_min = 1e-2;
    double length_scale_max = 1e2;
    double signal_variance_min = 1e-3;
    double signal_variance_max = 1e1;
    double noise_variance_min = 1e-6;
    double noise_variance_max = 1e0;
};

struct SearchConfig {
    int restarts = 5;
    std::uint64_t seed = 0;
    SearchBounds bounds{};
    KernelKind kind = KernelKind::matern52;
    /// Force a single shared length scale even for d > 1.
    bool isotropic = false;
    /// Eval budget of one restart's compass search.
    int max_evals_per_restart = 160;
    /// Initial/final step sizes of the compass search, in log space.
    double initial_step = 0.8;
    double min_step = 0.02;
    /// Start point of the first restart (e.g. the incumbent from the
    /// previous refit); remaining restarts start at seeded uniform
    /// draws inside the log bounds.
    std::optional<HyperParams> init;
    /// Returned, flagged, when every restart fails numerically.
    HyperParams fallback{Eigen::VectorXd::Ones(1), 1.0, 1e-2};
};

struct HyperSearchResult {
    HyperParams hyper;
    double log_marginal = 0.0;
    /// True when no candidate evaluated successfully and `fallback`
    /// was returned instead.
    bool fell_back = false;
};

/// Multi-restart derivative-free maximization of the log marginal
/// likelihood over log-parameter space. Returns the best candidate
/// evaluated anywhere during the search; deterministic given
/// config.seed. The prior mean is held at the empirical target mean.
HyperSearchResult optimize_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const SearchConfig& config);

} // namespace tduebo::gp
