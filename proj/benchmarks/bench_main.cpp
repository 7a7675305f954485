#include <benchmark/benchmark.h>

#include "dirclip/analytics.hpp"
#include "dirclip/dataset.hpp"
#include "dirclip/log_density.hpp"
#include "dirclip/samplers.hpp"

using namespace dirclip;

namespace {

struct ToyFixture {
  NetworkConfig config{2, {10, 10, 10, 10, 10}, 2, Activation::ReLU};
  ToyDataset data = generate_dataset({}, 0);
  PosteriorSpec posterior;
  ParamVector params;

  ToyFixture() {
    posterior.param_prior = PriorSpec::normal(0.7);
    posterior.prediction_prior = PriorSpec::dirclip(0.2, -50.0);
    Rng rng(1);
    params = init_params(config, rng);
  }
};

void BM_Forward(benchmark::State& state) {
  ToyFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(forward(f.config, f.params, f.data.points));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.data.size()));
}
BENCHMARK(BM_Forward);

void BM_GradLogDensity(benchmark::State& state) {
  ToyFixture f;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        grad_log_density(f.config, f.params, f.data.points, f.data.labels, f.posterior));
  }
}
BENCHMARK(BM_GradLogDensity);

void BM_HmcTrajectory(benchmark::State& state) {
  ToyFixture f;
  LogDensityFn target = [&](std::span<const double> theta, std::span<double> grad) {
    const ParamVector p(f.config, {theta.begin(), theta.end()});
    const auto r = grad_log_density(f.config, p, f.data.points, f.data.labels, f.posterior);
    std::copy(r.gradient.values().begin(), r.gradient.values().end(), grad.begin());
    return r.log_density;
  };
  HmcOptions o;
  o.leapfrog_steps = static_cast<std::size_t>(state.range(0));
  o.step_size = 1e-4;
  o.n_samples = 1;
  for (auto _ : state) benchmark::DoNotOptimize(hmc_sample(target, f.params.values(), o));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HmcTrajectory)->Arg(10)->Arg(100);

void BM_CdfUpperBound(benchmark::State& state) {
  double z = 0.0;
  for (auto _ : state) {
    z += 1e-6;
    if (z > 1.0) z = 0.0;
    benchmark::DoNotOptimize(cdf_upper_bound(z, 0.1));
  }
}
BENCHMARK(BM_CdfUpperBound);

void BM_Wasserstein(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein_cold_vs_upper(0.1));
}
BENCHMARK(BM_Wasserstein);

}  // namespace
BENCHMARK_MAIN();
