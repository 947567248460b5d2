#include <benchmark/benchmark.h>

#include "rpglab/dynamics.hpp"
#include "rpglab/envs.hpp"
#include "rpglab/estimators.hpp"
#include "rpglab/mlp.hpp"
#include "rpglab/policy.hpp"
#include "rpglab/rng.hpp"

using namespace rpglab;

namespace {

MlpParams bench_net() {
    auto rng = rng_fork(1, "bench/net");
    return make_policy_net(4, 2, rng);
}

void BM_MlpForward(benchmark::State& state) {
    const MlpParams net = bench_net();
    Vector x(4);
    x << 0.1, -0.2, 0.3, -0.4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mlp_forward(net, x));
    }
}
BENCHMARK(BM_MlpForward);

void BM_MlpBackward(benchmark::State& state) {
    const MlpParams net = bench_net();
    Vector x(4);
    x << 0.1, -0.2, 0.3, -0.4;
    Vector upstream(2);
    upstream << 1.0, -1.0;
    MlpTape tape;
    mlp_forward(net, x, &tape);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mlp_backward(net, tape, upstream));
    }
}
BENCHMARK(BM_MlpBackward);

void BM_EnvStep(benchmark::State& state) {
    auto env = make_env("cartpole");
    auto rng = rng_fork(2, "bench/env");
    env->reset(rng);
    int a = 0;
    for (auto _ : state) {
        if (env->done()) env->reset(rng);
        benchmark::DoNotOptimize(env->step(a));
        a ^= 1;
    }
}
BENCHMARK(BM_EnvStep);

void BM_SampleTrajectory(benchmark::State& state) {
    auto env = make_env("cartpole");
    auto rng = rng_fork(3, "bench/traj");
    RelaxedPolicy policy = make_relaxed_policy(4, 2, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_trajectory(*env, policy, rng));
    }
}
BENCHMARK(BM_SampleTrajectory);

std::vector<Trajectory> bench_batch(int count) {
    auto env = make_env("cartpole");
    auto rng = rng_fork(4, "bench/batch");
    RelaxedPolicy policy = make_relaxed_policy(4, 2, rng);
    std::vector<Trajectory> trajs;
    for (int i = 0; i < count; ++i) trajs.push_back(sample_trajectory(*env, policy, rng));
    return trajs;
}

TvLinearModel bench_model(const std::vector<Trajectory>& trajs) {
    int max_len = 0;
    for (const auto& t : trajs) max_len = std::max(max_len, t.length());
    std::vector<std::vector<DynamicsTuple>> per_t(max_len);
    for (const auto& traj : trajs)
        for (int t = 0; t < traj.length(); ++t)
            per_t[t].push_back(
                {traj.states[t], encode_action(traj.actions[t], 2), traj.states[t + 1]});
    DynamicsFitOptions opts;
    opts.prior_strength = 0.0;
    return fit_dynamics(nullptr, per_t, opts);
}

void BM_RpgGradient(benchmark::State& state) {
    const auto trajs = bench_batch(5);
    const TvLinearModel model = bench_model(trajs);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rpg_gradient(trajs, model));
    }
}
BENCHMARK(BM_RpgGradient);

void BM_ReinforceGradient(benchmark::State& state) {
    const auto trajs = bench_batch(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reinforce_gradient(trajs));
    }
}
BENCHMARK(BM_ReinforceGradient);

void BM_FitDynamics(benchmark::State& state) {
    const auto trajs = bench_batch(10);
    int max_len = 0;
    for (const auto& t : trajs) max_len = std::max(max_len, t.length());
    std::vector<std::vector<DynamicsTuple>> per_t(max_len);
    for (const auto& traj : trajs)
        for (int t = 0; t < traj.length(); ++t)
            per_t[t].push_back(
                {traj.states[t], encode_action(traj.actions[t], 2), traj.states[t + 1]});
    DynamicsFitOptions opts;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_dynamics(nullptr, per_t, opts));
    }
}
BENCHMARK(BM_FitDynamics);

void BM_GmmUpdate(benchmark::State& state) {
    auto rng = rng_fork(5, "bench/gmm");
    std::vector<Vector> data;
    for (int i = 0; i < 500; ++i) {
        Vector z(10);
        for (int d = 0; d < 10; ++d) z[d] = rng.normal01();
        data.push_back(z);
    }
    GmmOptions opts;
    opts.num_components = 8;
    opts.max_iterations = static_cast<int>(state.range(0));
    GmmPrior prior;
    for (auto _ : state) {
        auto em_rng = rng.child("em");
        benchmark::DoNotOptimize(update_gmm_prior(prior, data, opts, em_rng));
    }
}
BENCHMARK(BM_GmmUpdate)->Arg(1)->Arg(10);

} // namespace

BENCHMARK_MAIN();
