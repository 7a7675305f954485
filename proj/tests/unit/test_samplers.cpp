#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "dirclip/error.hpp"
#include "dirclip/samplers.hpp"
#include "support.hpp"

using namespace dirclip;

namespace {

double std_normal(std::span<const double> x, std::span<double> g) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += x[i] * x[i];
    g[i] = -x[i];
  }
  return -0.5 * s;
}

TrainingProblem tiny_problem() {
  TrainingProblem p;
  p.network = NetworkConfig{2, {4}, 2, Activation::ReLU};
  Rng rng(12);
  p.inputs = support::random_inputs(rng, 12, 2);
  for (std::size_t i = 0; i < 12; ++i) p.labels.push_back(p.inputs(i, 0) > 0 ? 1 : 0);
  p.posterior.prediction_prior = PriorSpec::dirclip(0.5, -10.0);
  return p;
}

}  // namespace

TEST(Hmc, ZeroLeapfrogStepsAlwaysAccepts) {
  HmcOptions o;
  o.leapfrog_steps = 0;
  o.n_samples = 50;
  const std::vector<double> init{0.3, -1.2};
  const auto r = hmc_sample(std_normal, init, o);
  EXPECT_EQ(r.accepted, 50u);
  for (const auto& s : r.samples) EXPECT_EQ(s, init);
}

TEST(Hmc, OneDimensionalNormalMoments) {
  HmcOptions o;
  o.leapfrog_steps = 20;
  o.step_size = 0.1;
  o.n_samples = 20000;
  o.seed = 3;
  const auto r = hmc_sample(std_normal, std::vector<double>{0.0}, o);
  double m = 0.0, v = 0.0;
  for (const auto& s : r.samples) m += s[0];
  m /= static_cast<double>(r.samples.size());
  for (const auto& s : r.samples) v += (s[0] - m) * (s[0] - m);
  v /= static_cast<double>(r.samples.size() - 1);
  EXPECT_LT(std::abs(m), 0.05);
  EXPECT_NEAR(v, 1.0, 0.1);
}

TEST(Hmc, SmallStepLimitAcceptsEverything) {
  HmcOptions o;
  o.leapfrog_steps = 10;
  o.step_size = 1e-4;
  o.n_samples = 500;
  const auto r = hmc_sample(std_normal, std::vector<double>{1.0, 2.0, -0.5}, o);
  EXPECT_EQ(r.accepted, r.proposals);
  for (double e : r.energy_errors) EXPECT_LT(std::abs(e), 1e-6);
}

TEST(Hmc, NonFiniteProposalsAreRejectedAndCounted) {
  // Density is -inf for x > 1, so long trajectories often leave the support.
  LogDensityFn target = [](std::span<const double> x, std::span<double> g) {
    g[0] = -x[0];
    return x[0] > 1.0 ? -INFINITY : -0.5 * x[0] * x[0];
  };
  HmcOptions o;
  o.leapfrog_steps = 30;
  o.step_size = 0.1;
  o.n_samples = 500;
  const auto r = hmc_sample(target, std::vector<double>{0.0}, o);
  EXPECT_GT(r.nonfinite_rejections, 0u);
  EXPECT_EQ(r.proposals, 500u);
  for (const auto& s : r.samples) EXPECT_LE(s[0], 1.0);
}

TEST(Hmc, ReproducibleFromSeed) {
  HmcOptions o;
  o.n_samples = 100;
  o.seed = 99;
  const auto a = hmc_sample(std_normal, std::vector<double>{0.0, 0.0}, o);
  const auto b = hmc_sample(std_normal, std::vector<double>{0.0, 0.0}, o);
  EXPECT_EQ(a.samples, b.samples);
  o.seed = 100;
  EXPECT_NE(hmc_sample(std_normal, std::vector<double>{0.0, 0.0}, o).samples, a.samples);
}

TEST(Schedule, Endpoints) {
  const Schedule s{0.1, 2.0, 10};
  EXPECT_EQ(schedule_at(s, 0.0).temperature, 0.0);
  EXPECT_EQ(schedule_at(s, 1.0 / 3.0).temperature, 0.0);
  EXPECT_DOUBLE_EQ(schedule_at(s, 2.0 / 3.0).temperature, 2.0);
  EXPECT_DOUBLE_EQ(schedule_at(s, 0.5).temperature, 1.0);
  EXPECT_EQ(schedule_at(s, 0.5).learning_rate, 0.1);
  EXPECT_EQ(schedule_at(s, 1.0).learning_rate, 0.0);
  EXPECT_THROW(schedule_at(s, 1.5), ConfigError);
  EXPECT_THROW(schedule_at(s, -0.1), ConfigError);
}

TEST(ScheduleProperty, ContinuousAndMonotone) {
  const Schedule s{1.0, 1.0, 1};
  double prev_t = 0.0, prev_lr = 1.0;
  for (int i = 0; i <= 3000; ++i) {
    const auto v = schedule_at(s, i / 3000.0);
    EXPECT_GE(v.temperature, prev_t);
    EXPECT_LE(v.learning_rate, prev_lr);
    EXPECT_LT(v.temperature - prev_t, 2e-3);
    EXPECT_LT(prev_lr - v.learning_rate, 2e-3);
    prev_t = v.temperature;
    prev_lr = v.learning_rate;
  }
}

TEST(Sghmc, FrictionTimesStepAboveOneIsAConfigError) {
  SamplerState s = SamplerState::start({0.0}, 0.5, 3.0, 1.0, 1);
  MinibatchGradFn g = [](std::span<const double>, std::size_t, std::span<double>) {};
  EXPECT_THROW(sghmc_epoch(s, 1, g), ConfigError);
}

TEST(Sghmc, ZeroFrictionColdFullBatchIsEulerDynamics) {
  SamplerState s = SamplerState::start({1.0, -2.0}, 0.1, 0.0, 0.0, 5);
  const auto v0 = s.momentum;
  MinibatchGradFn g = [](std::span<const double> x, std::size_t, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
  };
  s = sghmc_epoch(s, 1, g);
  const double x0 = 1.0 + 0.1 * v0[0];
  EXPECT_DOUBLE_EQ(s.params[0], x0);
  EXPECT_DOUBLE_EQ(s.momentum[0], v0[0] - 0.1 * x0);
}

TEST(Sghmc, ColdRunIsBitwiseDeterministic) {
  const TrainingProblem p = tiny_problem();
  SghmcConfig c;
  c.friction = 5.0;
  c.batch_size = 4;
  c.schedule = {0.05, 0.0, 30};
  Rng rng(1);
  const ParamVector init = init_params(p.network, rng);
  const auto a = sghmc_cycle(p, c, init, 42);
  const auto b = sghmc_cycle(p, c, init, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init);
}

TEST(Sghmc, InjectedNoiseVariance) {
  const double t = 0.7, c = 2.0, eps = 0.01;
  SamplerState s = SamplerState::start(std::vector<double>(1000000, 0.0), eps, c, t, 3);
  std::fill(s.momentum.begin(), s.momentum.end(), 0.0);
  MinibatchGradFn g = [](std::span<const double>, std::size_t, std::span<double>) {};
  sghmc_step(s, 0, g);
  double ss = 0.0;
  for (double v : s.momentum) ss += v * v;
  const double var = ss / static_cast<double>(s.momentum.size());
  EXPECT_NEAR(var / (2.0 * t * c * eps), 1.0, 0.01);
  EXPECT_DOUBLE_EQ(sghmc_noise_stddev(t, c, eps), std::sqrt(2.0 * t * c * eps));
}

TEST(Sghmc, StationaryVarianceOnNormalTarget) {
  SamplerState s = SamplerState::start({0.0}, 0.01, 1.0, 1.0, 8);
  MinibatchGradFn g = [](std::span<const double> x, std::size_t, std::span<double> out) { out[0] = -x[0]; };
  double ss = 0.0;
  std::size_t n = 0;
  for (int epoch = 0; epoch < 1000; ++epoch) {
    s = sghmc_epoch(std::move(s), 1000, g);
    if (epoch >= 50) {
      ss += s.params[0] * s.params[0];
      ++n;
    }
  }
  // Finer sampling of the same run would be correlated; one draw per epoch.
  EXPECT_NEAR(ss / static_cast<double>(n), 1.0, 0.15);
}

TEST(Sghmc, MomentumIsKeptAcrossEpochs) {
  SamplerState s = SamplerState::start({0.0, 0.0}, 0.1, 0.0, 0.0, 4);
  const auto v0 = s.momentum;
  EXPECT_NE(v0[0], 0.0);
  MinibatchGradFn g = [](std::span<const double>, std::size_t, std::span<double>) {};
  s = sghmc_epoch(std::move(s), 3, g);
  EXPECT_EQ(s.momentum, v0);
}

TEST(Minibatches, PartitionEveryIndexOnce) {
  const auto b = make_minibatches(23, 5, 7, 2);
  ASSERT_EQ(b.size(), 5u);
  std::multiset<std::size_t> seen;
  for (const auto& batch : b) seen.insert(batch.begin(), batch.end());
  EXPECT_EQ(seen.size(), 23u);
  for (std::size_t i = 0; i < 23; ++i) EXPECT_EQ(seen.count(i), 1u);
  EXPECT_EQ(make_minibatches(23, 5, 7, 2), b);
  EXPECT_NE(make_minibatches(23, 5, 7, 3), b);
}

TEST(Chains, SingleChainMatchesRunChain) {
  const TrainingProblem p = tiny_problem();
  ChainConfig c;
  c.hmc = {10, 0.01, 5, 0};
  const RunLog log = run_chains(p, 1, c, 17);
  const ChainResult r = run_chain(p, c, 0, 17);
  ASSERT_EQ(log.chains.size(), 1u);
  EXPECT_EQ(log.chains[0].samples, r.samples);
}

TEST(Chains, DeterministicAcrossThreadCounts) {
  const TrainingProblem p = tiny_problem();
  ChainConfig c;
  c.kind = SamplerKind::SGHMC;
  c.sghmc.friction = 10.0;
  c.sghmc.batch_size = 4;
  c.sghmc.schedule = {0.05, 1.0, 12};
  const RunLog a = run_chains(p, 4, c, 5, 1);
  const RunLog b = run_chains(p, 4, c, 5, 3);
  const RunLog again = run_chains(p, 4, c, 5, 1);
  ASSERT_EQ(a.chains.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(a.chains[i].seed, 5u + i);
    EXPECT_EQ(a.chains[i].samples, b.chains[i].samples);
    EXPECT_EQ(a.chains[i].samples, again.chains[i].samples);
  }
  EXPECT_NE(a.chains[0].samples, a.chains[1].samples);
}

TEST(Chains, FailureIsRecordedAndOtherChainsContinue) {
  TrainingProblem p = tiny_problem();
  p.posterior.prediction_prior = PriorSpec::dirichlet(0.01);
  ChainConfig c;
  c.kind = SamplerKind::SGHMC;
  c.sghmc.friction = 1.0;
  c.sghmc.batch_size = 12;
  c.sghmc.schedule = {1.0, 1.0, 200};
  const RunLog log = run_chains(p, 3, c, 0, 1);
  ASSERT_EQ(log.chains.size(), 3u);
  std::size_t failed = 0;
  for (const auto& ch : log.chains) failed += ch.failure ? 1 : 0;
  EXPECT_GT(failed, 0u);
  EXPECT_EQ(log.all_samples().size(), 3u - failed);
  EXPECT_FALSE(log.warnings.empty());
}

TEST(Chains, PretrainStartsFromAFittedSolution) {
  TrainingProblem p = tiny_problem();
  ChainConfig c;
  c.hmc = {1, 1e-6, 1, 0};
  c.pretrain = PretrainConfig{PretrainObjective::MaximumLikelihood, 500, 0.03, 10.0};
  const auto r = run_chain(p, c, 0, 1);
  ASSERT_FALSE(r.failure) << *r.failure;
  const auto preds = forward(p.network, r.samples[0], p.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].argmax() == p.labels[i];
  EXPECT_GE(correct, 11u);
}
