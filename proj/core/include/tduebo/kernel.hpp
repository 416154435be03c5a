#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace tduebo::gp {

enum class KernelKind {
    matern52,
    squared_exponential,
};

KernelKind kernel_kind_from_string(std::string_view name);
std::string_view to_string(KernelKind kind);

/// Kernel and noise parameters of the GP surrogate.
///
/// `length_scales` holds one positive scale per input dimension; a
/// single entry is broadcast to every dimension (isotropic kernel).
struct HyperParams {
    Eigen::VectorXd length_scales = Eigen::VectorXd::Ones(1);
    double signal_variance = 1.0;
    double noise_variance = 1e-6;

    bool isotropic() const { return length_scales.size() == 1; }

    /// Length scale applied to dimension `dim`.
    double length_scale(Eigen::Index dim) const {
        return isotropic() ? length_scales(0) : length_scales(dim);
    }

    /// Throws InputError unless all length scales and the signal
    /// variance are positive and the noise variance is non-negative.
    void validate() const;
};

/// Squared distance between x and x' after dividing each coordinate
/// difference by its length scale.
double scaled_squared_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                               const HyperParams& hyper);

/// Kernel value as a function of the scaled squared distance. Shared
/// by the scalar evaluator and the batched fast paths so they agree
/// bit for bit.
double kernel_from_r2(double r2, const HyperParams& hyper, KernelKind kind);

/// k(x, x') for the given kernel kind. Symmetric; equals
/// signal_variance at zero distance.
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                   const HyperParams& hyper, KernelKind kind);

/// Gram matrix K(X, X) without any noise term.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const HyperParams& hyper,
                              KernelKind kind);

/// Cross-covariance K(A, B), one row per row of A.
Eigen::MatrixXd cross_kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const HyperParams& hyper, KernelKind kind);

} // namespace tduebo::gp
