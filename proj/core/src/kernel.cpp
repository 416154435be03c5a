#include "tduebo/kernel.hpp"

#include "tduebo/errors.hpp"

#include <cmath>

namespace tduebo::gp {

namespace {

const double kSqrt5 = std::sqrt(5.0);

void check_dimensions(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                      const HyperParams& hyper) {
    if (x.size() != x_prime.size())
        throw InputError("kernel_eval: point dimensions differ (" + std::to_string(x.size()) +
                         " vs " + std::to_string(x_prime.size()) + ")");
    if (!x.allFinite() || !x_prime.allFinite())
        throw InputError("kernel_eval: non-finite input point");
    if (!hyper.isotropic() && hyper.length_scales.size() != x.size())
        throw InputError("kernel_eval: " + std::to_string(hyper.length_scales.size()) +
                         " length scales for " + std::to_string(x.size()) + "-dimensional points");
}

} // namespace

KernelKind kernel_kind_from_string(std::string_view name) {
    if (name == "matern52")
        return KernelKind::matern52;
    if (name == "se" || name == "squared_exponential")
        return KernelKind::squared_exponential;
    throw ConfigError("unknown kernel kind '" + std::string(name) +
                      "' (expected 'matern52' or 'se')");
}

std::string_view to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::matern52: return "matern52";
    case KernelKind::squared_exponential: return "se";
    }
    return "?";
}

void HyperParams::validate() const {
    if (length_scales.size() == 0)
        throw InputError("HyperParams: no length scales");
    for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
        const double l = length_scales(i);
        if (!(l > 0.0) || !std::isfinite(l))
            throw InputError("HyperParams: length_scales[" + std::to_string(i) +
                             "] = " + std::to_string(l) + " must be positive");
    }
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
        throw InputError("HyperParams: signal_variance must be positive");
    if (noise_variance < 0.0 || !std::isfinite(noise_variance))
        throw InputError("HyperParams: noise_variance must be non-negative");
}

double scaled_squared_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                               const HyperParams& hyper) {
    double r2 = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double dz = (x(k) - x_prime(k)) / hyper.length_scale(k);
        r2 += dz * dz;
    }
    return r2;
}

double kernel_from_r2(double r2, const HyperParams& hyper, KernelKind kind) {
    switch (kind) {
    case KernelKind::matern52: {
        const double r = std::sqrt(r2);
        const double s = kSqrt5 * r;
        return hyper.signal_variance * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
    }
    case KernelKind::squared_exponential:
        return hyper.signal_variance * std::exp(-0.5 * r2);
    }
    return 0.0;
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                   const HyperParams& hyper, KernelKind kind) {
    check_dimensions(x, x_prime, hyper);
    hyper.validate();
    return kernel_from_r2(scaled_squared_distance(x, x_prime, hyper), hyper, kind);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const HyperParams& hyper,
                              KernelKind kind) {
    hyper.validate();
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = hyper.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel_from_r2(
                scaled_squared_distance(X.row(i).transpose(), X.row(j).transpose(), hyper), hyper,
                kind);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

Eigen::MatrixXd cross_kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const HyperParams& hyper, KernelKind kind) {
    hyper.validate();
    if (A.cols() != B.cols())
        throw InputError("cross_kernel_matrix: point dimensions differ");
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            K(i, j) = kernel_from_r2(
                scaled_squared_distance(A.row(i).transpose(), B.row(j).transpose(), hyper), hyper,
                kind);
    return K;
}

} // namespace tduebo::gp
