#include "tduebo/hyperopt.hpp"

#include "tduebo/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace tduebo::gp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPi = 3.141592653589793238462643383279502884;

/// LML evaluator with per-dimension squared differences precomputed,
/// so each candidate costs one Gram-matrix fill plus one Cholesky.
class LmlEvaluator {
public:
    LmlEvaluator(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelKind kind,
                 bool isotropic)
        : kind_(kind), n_(X.rows()) {
        const Eigen::Index d = X.cols();
        n_scales_ = isotropic ? 1 : d;
        sqdiff_.reserve(n_scales_);
        if (isotropic) {
            Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n_, n_);
            for (Eigen::Index k = 0; k < d; ++k)
                for (Eigen::Index i = 0; i < n_; ++i)
                    for (Eigen::Index j = 0; j < i; ++j) {
                        const double dz = X(i, k) - X(j, k);
                        total(i, j) += dz * dz;
                    }
            sqdiff_.push_back(std::move(total));
        } else {
            for (Eigen::Index k = 0; k < d; ++k) {
                Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
                for (Eigen::Index i = 0; i < n_; ++i)
                    for (Eigen::Index j = 0; j < i; ++j) {
                        const double dz = X(i, k) - X(j, k);
                        m(i, j) = dz * dz;
                    }
                sqdiff_.push_back(std::move(m));
            }
        }
        const double mean = y.mean();
        centered_ = y.array() - mean;
        mean_const_ = mean;
        K_.resize(n_, n_);
    }

    Eigen::Index num_scales() const { return n_scales_; }
    double mean_const() const { return mean_const_; }

    /// Log marginal likelihood of the candidate, or -inf when the
    /// factorization fails even after jitter escalation.
    double eval(const HyperParams& hyper) {
        // lower triangle of the scaled squared distances
        for (Eigen::Index i = 0; i < n_; ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                K_(i, j) = 0.0;
        for (Eigen::Index s = 0; s < n_scales_; ++s) {
            const double inv_l2 = 1.0 / (hyper.length_scales(s) * hyper.length_scales(s));
            for (Eigen::Index i = 0; i < n_; ++i)
                for (Eigen::Index j = 0; j < i; ++j)
                    K_(i, j) += sqdiff_[s](i, j) * inv_l2;
        }
        for (Eigen::Index i = 0; i < n_; ++i) {
            K_(i, i) = hyper.signal_variance + hyper.noise_variance;
            for (Eigen::Index j = 0; j < i; ++j) {
                const double v = kernel_from_r2(K_(i, j), hyper, kind_);
                K_(i, j) = v;
                K_(j, i) = v;
            }
        }
        try {
            const CholeskyResult chol = cholesky_with_jitter(K_, hyper.signal_variance);
            const Eigen::VectorXd alpha =
                chol.factor.triangularView<Eigen::Lower>().solve(centered_);
            const double quad = -0.5 * alpha.squaredNorm();
            const double logdet = -chol.factor.diagonal().array().log().sum();
            const double lml = quad + logdet - 0.5 * static_cast<double>(n_) * std::log(2.0 * kPi);
            return std::isfinite(lml) ? lml : kNegInf;
        } catch (const NumericalError&) {
            return kNegInf;
        }
    }

private:
    KernelKind kind_;
    Eigen::Index n_;
    Eigen::Index n_scales_ = 1;
    std::vector<Eigen::MatrixXd> sqdiff_;
    Eigen::VectorXd centered_;
    double mean_const_ = 0.0;
    Eigen::MatrixXd K_;
};

HyperParams params_from_log(const Eigen::VectorXd& theta, Eigen::Index n_scales) {
    HyperParams h;
    h.length_scales = theta.head(n_scales).array().exp();
    h.signal_variance = std::exp(theta(n_scales));
    h.noise_variance = std::exp(theta(n_scales + 1));
    return h;
}

} // namespace

HyperSearchResult optimize_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                           const SearchConfig& config) {
    if (X.rows() < 2)
        throw InputError("optimize_hyperparameters: need at least two training points");
    if (X.rows() != y.size())
        throw InputError("optimize_hyperparameters: input/target count mismatch");
    if (!X.allFinite() || !y.allFinite())
        throw InputError("optimize_hyperparameters: non-finite training data");
    if (config.restarts < 1)
        throw InputError("optimize_hyperparameters: restarts must be >= 1");

    const bool isotropic = config.isotropic || X.cols() == 1;
    LmlEvaluator evaluator(X, y, config.kind, isotropic);
    const Eigen::Index p = evaluator.num_scales() + 2;

    Eigen::VectorXd lo(p), hi(p);
    for (Eigen::Index i = 0; i < evaluator.num_scales(); ++i) {
        lo(i) = std::log(config.bounds.length_scale_min);
        hi(i) = std::log(config.bounds.length_scale_max);
    }
    lo(p - 2) = std::log(config.bounds.signal_variance_min);
    hi(p - 2) = std::log(config.bounds.signal_variance_max);
    lo(p - 1) = std::log(config.bounds.noise_variance_min);
    hi(p - 1) = std::log(config.bounds.noise_variance_max);

    const auto clamp = [&](Eigen::VectorXd theta) {
        for (Eigen::Index i = 0; i < p; ++i)
            theta(i) = std::min(std::max(theta(i), lo(i)), hi(i));
        return theta;
    };

    Eigen::VectorXd start0 = 0.5 * (lo + hi);
    if (config.init) {
        HyperParams init = *config.init;
        if (init.length_scales.size() != evaluator.num_scales())
            init.length_scales =
                Eigen::VectorXd::Constant(evaluator.num_scales(), init.length_scales.mean());
        Eigen::VectorXd theta(p);
        theta.head(evaluator.num_scales()) = init.length_scales.array().log();
        theta(p - 2) = std::log(init.signal_variance);
        theta(p - 1) = std::log(std::max(init.noise_variance, config.bounds.noise_variance_min));
        start0 = clamp(theta);
    }

    std::mt19937_64 engine(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double best_lml = kNegInf;
    Eigen::VectorXd best_theta;

    for (int restart = 0; restart < config.restarts; ++restart) {
        Eigen::VectorXd theta(p);
        if (restart == 0) {
            theta = start0;
        } else {
            for (Eigen::Index i = 0; i < p; ++i)
                theta(i) = lo(i) + (hi(i) - lo(i)) * unit(engine);
        }

        int evals = 0;
        double f = evaluator.eval(params_from_log(theta, evaluator.num_scales()));
        ++evals;
        if (f > best_lml) {
            best_lml = f;
            best_theta = theta;
        }

        double step = config.initial_step;
        while (step >= config.min_step && evals < config.max_evals_per_restart) {
            bool improved = false;
            for (Eigen::Index i = 0; i < p && evals < config.max_evals_per_restart; ++i) {
                for (const double sgn : {1.0, -1.0}) {
                    Eigen::VectorXd cand = theta;
                    cand(i) = std::min(std::max(cand(i) + sgn * step, lo(i)), hi(i));
                    if (cand(i) == theta(i))
                        continue;
                    const double fc = evaluator.eval(params_from_log(cand, evaluator.num_scales()));
                    ++evals;
                    if (fc > best_lml) {
                        best_lml = fc;
                        best_theta = cand;
                    }
                    if (fc > f) {
                        theta = cand;
                        f = fc;
                        improved = true;
                        break;
                    }
                    if (evals >= config.max_evals_per_restart)
                        break;
                }
            }
            if (!improved)
                step *= 0.5;
        }
    }

    if (!std::isfinite(best_lml)) {
        HyperSearchResult result;
        result.hyper = config.fallback;
        if (result.hyper.length_scales.size() != evaluator.num_scales())
            result.hyper.length_scales =
                Eigen::VectorXd::Constant(evaluator.num_scales(), result.hyper.length_scales.mean());
        result.log_marginal = kNegInf;
        result.fell_back = true;
        return result;
    }

    HyperSearchResult result;
    result.hyper = params_from_log(best_theta, evaluator.num_scales());
    result.log_marginal = best_lml;
    result.fell_back = false;
    return result;
}

} // namespace tduebo::gp
