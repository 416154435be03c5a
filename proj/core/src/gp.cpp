#include "tduebo/gp.hpp"

#include "tduebo/errors.hpp"
#include "tduebo/util.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace tduebo::gp {

namespace {

constexpr double kJitterStartFactor = 1e-10;
constexpr double kJitterMaxFactor = 1e-4;
constexpr double kPi = 3.141592653589793238462643383279502884;

void check_training_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const HyperParams& hyper) {
    if (X.rows() < 1)
        throw InputError("fit: need at least one training point");
    if (X.rows() != y.size())
        throw InputError("fit: " + std::to_string(X.rows()) + " inputs but " +
                         std::to_string(y.size()) + " targets");
    if (!X.allFinite() || !y.allFinite())
        throw InputError("fit: non-finite training data");
    if (!hyper.isotropic() && hyper.length_scales.size() != X.cols())
        throw InputError("fit: length-scale count does not match input dimension");
    hyper.validate();
}

} // namespace

CholeskyResult cholesky_with_jitter(const Eigen::MatrixXd& K, double signal_variance) {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success)
        return {llt.matrixL(), 0.0};

    const Eigen::Index n = K.rows();
    double jitter = kJitterStartFactor * signal_variance;
    const double max_jitter = kJitterMaxFactor * signal_variance;
    while (jitter <= max_jitter * (1.0 + 1e-12)) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success)
            return {llt.matrixL(), jitter};
        jitter *= 10.0;
    }
    throw NumericalError("Cholesky factorization failed after jitter escalation up to " +
                             format_g9(max_jitter),
                         max_jitter);
}

std::uint64_t GpModel::fingerprint() const {
    Fnv1a64 h;
    h.update(static_cast<std::uint64_t>(train_inputs_.rows()));
    h.update(static_cast<std::uint64_t>(train_inputs_.cols()));
    h.update(train_inputs_);
    h.update(train_targets_);
    return h.digest();
}

GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const HyperParams& hyper,
            double mean_const, KernelKind kind) {
    check_training_inputs(X, y, hyper);
    if (!std::isfinite(mean_const))
        throw InputError("fit: non-finite prior mean");

    Eigen::MatrixXd K = kernel_matrix(X, hyper, kind);
    K.diagonal().array() += hyper.noise_variance;
    CholeskyResult chol = cholesky_with_jitter(K, hyper.signal_variance);

    const Eigen::VectorXd centered = y.array() - mean_const;
    // weights = L⁻ᵀ (L⁻¹ centered)
    Eigen::VectorXd w = chol.factor.triangularView<Eigen::Lower>().solve(centered);
    chol.factor.triangularView<Eigen::Lower>().transpose().solveInPlace(w);

    GpModel model;
    model.train_inputs_ = X;
    model.train_targets_ = y;
    model.hyper_ = hyper;
    model.kernel_ = kind;
    model.chol_factor_ = std::move(chol.factor);
    model.weights_ = std::move(w);
    model.mean_const_ = mean_const;
    model.jitter_ = chol.jitter;
    return model;
}

Prediction predict(const GpModel& model, const Eigen::MatrixXd& X_star,
                   bool include_observation_noise) {
    if (X_star.cols() != model.dim())
        throw InputError("predict: query dimension " + std::to_string(X_star.cols()) +
                         " does not match model dimension " + std::to_string(model.dim()));
    if (!X_star.allFinite())
        throw InputError("predict: non-finite query point");

    const Eigen::MatrixXd k_star =
        cross_kernel_matrix(X_star, model.train_inputs(), model.hyper(), model.kernel());

    Prediction out;
    out.mean = (k_star * model.weights()).array() + model.mean_const();

    // v = L⁻¹ k*ᵀ, column per query point
    Eigen::MatrixXd v = k_star.transpose();
    model.chol_factor().triangularView<Eigen::Lower>().solveInPlace(v);

    const double prior_var = model.hyper().signal_variance;
    const double clamp_floor = -GpModel::kVarianceClampTol * prior_var;
    out.variance.resize(X_star.rows());
    for (Eigen::Index i = 0; i < X_star.rows(); ++i) {
        double var = prior_var - v.col(i).squaredNorm();
        if (var < clamp_floor)
            throw NumericalError("predict: variance " + format_g9(var) +
                                     " is negative beyond the clamping tolerance",
                                 model.jitter());
        var = std::max(var, 0.0);
        if (include_observation_noise)
            var += model.hyper().noise_variance;
        out.variance(i) = var;
    }
    return out;
}

double average_uncertainty(const GpModel& model, const Eigen::MatrixXd& X_star) {
    if (X_star.rows() < 1)
        throw InputError("average_uncertainty: empty query set");
    const Prediction pred = predict(model, X_star);
    return pred.variance.array().sqrt().mean();
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const HyperParams& hyper, double mean_const, KernelKind kind) {
    check_training_inputs(X, y, hyper);

    Eigen::MatrixXd K = kernel_matrix(X, hyper, kind);
    K.diagonal().array() += hyper.noise_variance;
    const CholeskyResult chol = cholesky_with_jitter(K, hyper.signal_variance);

    const Eigen::VectorXd centered = y.array() - mean_const;
    const Eigen::VectorXd alpha =
        chol.factor.triangularView<Eigen::Lower>().solve(centered);

    const double n = static_cast<double>(X.rows());
    const double quad = -0.5 * alpha.squaredNorm();
    const double logdet = -chol.factor.diagonal().array().log().sum();
    return quad + logdet - 0.5 * n * std::log(2.0 * kPi);
}

} // namespace tduebo::gp
