// Microbenchmarks for the hot paths of a campaign iteration: kernel
// matrix assembly, the Cholesky fit, pool-sized batch prediction, and
// the marginal-likelihood evaluation that dominates hyperparameter
// search.

#include "tduebo/data.hpp"
#include "tduebo/gp.hpp"
#include "tduebo/hyperopt.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <random>

namespace {

using namespace tduebo;

struct Problem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::MatrixXd pool;
    gp::HyperParams hyper;
};

Problem make_problem(Eigen::Index n, Eigen::Index d, Eigen::Index pool_n) {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::normal_distribution<double> uy(0.0, 1.0);
    Problem p;
    p.X.resize(n, d);
    p.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            p.X(i, j) = ux(rng);
        }
        p.y(i) = uy(rng);
    }
    p.pool.resize(pool_n, d);
    for (Eigen::Index i = 0; i < pool_n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            p.pool(i, j) = ux(rng);
        }
    }
    p.hyper.length_scales = Eigen::VectorXd::Constant(d, 0.6);
    p.hyper.signal_variance = 1.2;
    p.hyper.noise_variance = 1e-2;
    return p;
}

void bm_kernel_matrix(benchmark::State& state) {
    const auto p = make_problem(state.range(0), 4, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::kernel_matrix(p.X, p.hyper, gp::KernelKind::matern52));
    }
}
BENCHMARK(bm_kernel_matrix)->Arg(30)->Arg(80)->Arg(160);

void bm_fit(benchmark::State& state) {
    const auto p = make_problem(state.range(0), 4, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::fit(p.X, p.y, p.hyper, p.y.mean()));
    }
}
BENCHMARK(bm_fit)->Arg(30)->Arg(80)->Arg(160);

void bm_predict_pool(benchmark::State& state) {
    const auto p = make_problem(80, 4, state.range(0));
    const gp::GpModel model = gp::fit(p.X, p.y, p.hyper, p.y.mean());
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::predict(model, p.pool));
    }
}
BENCHMARK(bm_predict_pool)->Arg(60)->Arg(144);

void bm_log_marginal_likelihood(benchmark::State& state) {
    const auto p = make_problem(state.range(0), 4, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            gp::log_marginal_likelihood(p.X, p.y, p.hyper, p.y.mean()));
    }
}
BENCHMARK(bm_log_marginal_likelihood)->Arg(30)->Arg(80)->Arg(160);

void bm_hyperopt_refit(benchmark::State& state) {
    const auto p = make_problem(state.range(0), 4, 1);
    gp::SearchConfig config;
    config.seed = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::optimize_hyperparameters(p.X, p.y, config));
    }
}
BENCHMARK(bm_hyperopt_refit)->Arg(20)->Arg(35)->Unit(benchmark::kMillisecond);

void bm_1d_campaign_split(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(data::make_1d_split(61, 7));
    }
}
BENCHMARK(bm_1d_campaign_split);

} // namespace

BENCHMARK_MAIN();
