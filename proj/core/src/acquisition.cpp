#include "tduebo/acquisition.hpp"

#include "tduebo/errors.hpp"
#include "tduebo/util.hpp"

#include <cmath>
#include <string>

namespace tduebo::acq {

void AcqParams::validate() const {
    if (!(xi >= 0.0) || !std::isfinite(xi))
        throw InputError("AcqParams: xi must be non-negative");
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
        throw InputError("AcqParams: kappa must be non-negative");
}

std::string_view to_string(AcqMode mode) {
    return mode == AcqMode::ucb ? "ucb" : "ei";
}

ThresholdKind threshold_kind_from_string(std::string_view name) {
    if (name == "relative")
        return ThresholdKind::relative;
    if (name == "absolute")
        return ThresholdKind::absolute;
    throw ConfigError("unknown threshold kind '" + std::string(name) +
                      "' (expected 'relative' or 'absolute')");
}

std::string_view to_string(ThresholdKind kind) {
    return kind == ThresholdKind::relative ? "relative" : "absolute";
}

double ei_score(double mean, double std, double f_best, double xi) {
    if (!std::isfinite(mean) || !std::isfinite(std) || !std::isfinite(f_best) ||
        !std::isfinite(xi))
        throw InputError("ei_score: non-finite input");
    if (std < 0.0)
        throw InputError("ei_score: negative standard deviation");
    if (xi < 0.0)
        throw InputError("ei_score: negative xi");

    const double improvement = mean - f_best - xi;
    if (std == 0.0)
        return std::max(0.0, improvement);
    const double z = improvement / std;
    const double ei = improvement * norm_cdf(z) + std * norm_pdf(z);
    return std::max(0.0, ei);
}

double ucb_score(double mean, double std, double kappa) {
    if (!std::isfinite(mean) || !std::isfinite(std) || !std::isfinite(kappa))
        throw InputError("ucb_score: non-finite input");
    if (std < 0.0)
        throw InputError("ucb_score: negative standard deviation");
    if (kappa < 0.0)
        throw InputError("ucb_score: negative kappa");
    return mean + kappa * std;
}

[[nodiscard]] PolicyState update_policy(PolicyState state, double sigma_bar, int iteration) {
    if (!(sigma_bar >= 0.0) || !std::isfinite(sigma_bar))
        throw InputError("update_policy: sigma_bar must be a non-negative real");

    if (!state.baseline_sigma_bar)
        state.baseline_sigma_bar = sigma_bar;

    if (state.mode == AcqMode::ucb) {
        const double effective = state.threshold_kind == ThresholdKind::relative
                                     ? state.threshold_value * *state.baseline_sigma_bar
                                     : state.threshold_value;
        if (sigma_bar < effective) {
            state.mode = AcqMode::ei;
            state.switch_iteration = iteration;
        }
    }
    return state;
}

Eigen::VectorXd score_candidates(const gp::GpModel& model, const Eigen::MatrixXd& pool,
                                 const PolicyState& state, const AcqParams& params,
                                 double f_best) {
    if (pool.rows() < 1)
        throw InputError("score_candidates: empty candidate pool");
    params.validate();

    const gp::Prediction pred = gp::predict(model, pool);
    Eigen::VectorXd scores(pool.rows());
    for (Eigen::Index i = 0; i < pool.rows(); ++i) {
        const double sd = std::sqrt(pred.variance(i));
        scores(i) = state.mode == AcqMode::ucb ? ucb_score(pred.mean(i), sd, params.kappa)
                                               : ei_score(pred.mean(i), sd, f_best, params.xi);
    }
    return scores;
}

} // namespace tduebo::acq
