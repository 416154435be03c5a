#pragma once

#include "tduebo/kernel.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace tduebo::gp {

struct Prediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Result of the jitter-escalating Cholesky factorization.
struct CholeskyResult {
    Eigen::MatrixXd factor; // lower triangular L with L Lᵀ = K + jitter I
    double jitter = 0.0;
};

/// Factorizes a symmetric matrix, adding jitter to the diagonal on
/// failure. Jitter starts at 1e-10 * signal_variance and escalates
/// tenfold up to 1e-4 * signal_variance; past that a NumericalError
/// carrying the last jitter tried is raised.
CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& K, double signal_variance);

/// Fitted exact-GP surrogate. Immutable once constructed, so instances
/// can be shared freely across concurrent campaign runs.
class GpModel {
public:
    /// Negative predictive variances larger than this fraction of the
    /// signal variance are treated as an internal inconsistency rather
    /// than clamped.
    static constexpr double kVarianceClampTol = 1e-8;

    const Eigen::MatrixXd& train_inputs() const { return train_inputs_; }
    const Eigen::VectorXd& train_targets() const { return train_targets_; }
    const HyperParams& hyper() const { return hyper_; }
    KernelKind kernel() const { return kernel_; }
    const Eigen::MatrixXd& chol_factor() const { return chol_factor_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double mean_const() const { return mean_const_; }
    double jitter() const { return jitter_; }

    Eigen::Index size() const { return train_inputs_.rows(); }
    Eigen::Index dim() const { return train_inputs_.cols(); }

    /// FNV-1a hash over the training set; used to fingerprint runs.
    std::uint64_t fingerprint() const;

private:
    friend GpModel fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const HyperParams&, double,
                       KernelKind);

    Eigen::MatrixXd train_inputs_;
    Eigen::VectorXd train_targets_;
    HyperParams hyper_;
    KernelKind kernel_ = KernelKind::matern52;
    Eigen::MatrixXd chol_factor_;
    Eigen::VectorXd weights_; // (K + noise I)⁻¹ (y - mean_const)
    double mean_const_ = 0.0;
    double jitter_ = 0.0;
};

/// Fits the GP: factorizes K(X,X) + noise_variance I and precomputes
/// the weight vector. Deterministic for identical inputs.
GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const HyperParams& hyper,
            double mean_const, KernelKind kind = KernelKind::matern52);

/// Predictive mean and variance at each row of X_star. Variances are
/// latent-function variances (no observation noise) unless
/// `include_observation_noise` is set; they are clamped to be
/// non-negative before any square root is taken.
Prediction predict(const GpModel& model, const Eigen::MatrixXd& X_star,
                   bool include_observation_noise = false);

/// Mean predictive standard deviation over the rows of X_star.
double average_uncertainty(const GpModel& model, const Eigen::MatrixXd& X_star);

/// Log marginal likelihood of y under the GP prior with the given
/// hyperparameters, computed through the Cholesky factor.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const HyperParams& hyper, double mean_const,
                               KernelKind kind = KernelKind::matern52);

} // namespace tduebo::gp
