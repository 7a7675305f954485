#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirclip/nn.hpp"
#include "dirclip/priors.hpp"

namespace dirclip {

/// Returns log pi(theta) and writes its gradient into `grad`.
using LogDensityFn = std::function<double(std::span<const double> theta, std::span<double> grad)>;

// ---------------------------------------------------------------------------
// HMC

struct HmcOptions {
  std::size_t leapfrog_steps = 10;
  double step_size = 0.1;
  std::size_t n_samples = 100;
  /// Proposals run before the first saved sample.
  std::size_t n_warmup = 0;
  std::uint64_t seed = 0;
};

struct HmcResult {
  std::vector<std::vector<double>> samples;
  /// H(proposal) - H(current), one entry per proposal (warm-up included).
  std::vector<double> energy_errors;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t nonfinite_rejections = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Leapfrog HMC with unit mass matrix and exact Metropolis correction.
/// Momentum is refreshed from N(0, I) before every trajectory.
HmcResult hmc_sample(const LogDensityFn& target, std::span<const double> init,
                     const HmcOptions& options);

// ---------------------------------------------------------------------------
// SGHMC

struct Schedule {
  double max_lr = 1e-3;
  double max_temperature = 1.0;
  std::size_t epochs = 100;

  void validate() const;
};

struct ScheduleValue {
  double learning_rate;
  double temperature;
};

/// Temperature: 0 until f = 1/3, linear ramp to max on (1/3, 2/3), then max.
/// Learning rate: max until f = 1/2, then max * cos(pi (f - 1/2)).
ScheduleValue schedule_at(const Schedule& schedule, double epoch_fraction);

struct SamplerState {
  std::vector<double> params;
  std::vector<double> momentum;
  double step_size = 1e-3;
  double friction = 1.0;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Counter keying the injected-noise stream; incremented per update.
  std::uint64_t step = 0;
  double epoch_fraction = 0.0;

  /// Momentum is drawn once here and never refreshed.
  static SamplerState start(std::vector<double> params, double step_size, double friction,
                            double temperature, std::uint64_t seed);
  /// Throws ConfigError on |v| != |theta|, eps <= 0, T < 0, or eps*C > 1.
  void validate() const;
};

/// grad log pi~(theta) for minibatch `batch`, written into `grad`.
using MinibatchGradFn =
    std::function<void(std::span<const double> theta, std::size_t batch, std::span<double> grad)>;

/// One SGHMC update using minibatch `batch`:
///   theta += eps v
///   v = (1 - eps C) v + eps grad(theta) + N(0, 2 T C eps I)
void sghmc_step(SamplerState& state, std::size_t batch, const MinibatchGradFn& grad);

/// One pass over `n_batches` minibatches.
SamplerState sghmc_epoch(SamplerState state, std::size_t n_batches, const MinibatchGradFn& grad);

// ---------------------------------------------------------------------------
// Chains over a network posterior

struct TrainingProblem {
  NetworkConfig network;
  Matrix inputs;
  std::vector<std::size_t> labels;
  PosteriorSpec posterior;

  void validate() const;
};

enum class SamplerKind { HMC, SGHMC };

struct HmcConfig {
  std::size_t leapfrog_steps = 100;
  double step_size = 1e-3;
  std::size_t n_samples = 100;
  std::size_t n_warmup = 0;
};

struct SghmcConfig {
  double friction = 1.0;
  std::size_t batch_size = 16;
  Schedule schedule;
};

enum class PretrainObjective {
  /// Likelihood only: no parameter or prediction prior.
  MaximumLikelihood,
  /// The chain's own (untempered) posterior.
  Posterior,
};

/// Full-batch optimisation of the chain's own random init before sampling.
struct PretrainConfig {
  PretrainObjective objective = PretrainObjective::MaximumLikelihood;
  std::size_t epochs = 1000;
  double learning_rate = 1e-2;
  double friction = 10.0;
};

struct ChainConfig {
  SamplerKind kind = SamplerKind::HMC;
  HmcConfig hmc;
  SghmcConfig sghmc;
  std::optional<PretrainConfig> pretrain;
};

struct ChainResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<ParamVector> samples;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t nonfinite_events = 0;
  std::optional<std::string> failure;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

struct RunLog {
  NetworkConfig network;
  std::uint64_t base_seed = 0;
  SamplerKind kind = SamplerKind::HMC;
  std::vector<ChainResult> chains;
  std::vector<std::string> warnings;

  /// All samples of all successful chains, chain-major.
  std::vector<ParamVector> all_samples() const;
};

/// Split n into shuffled minibatches of the given size (last may be short).
std::vector<std::vector<std::size_t>> make_minibatches(std::size_t n, std::size_t batch_size,
                                                       std::uint64_t seed, std::uint64_t epoch);

/// One full SGHMC cycle under `config.schedule`; returns the final sample.
ParamVector sghmc_cycle(const TrainingProblem& problem, const SghmcConfig& config,
                        ParamVector init, std::uint64_t seed, std::size_t* nonfinite = nullptr);

/// Single chain; HMC keeps every post-warm-up sample, SGHMC only the last.
/// Exceptions, and HMC runs in which every trajectory diverged, are recorded
/// in `failure`.
ChainResult run_chain(const TrainingProblem& problem, const ChainConfig& config,
                      std::size_t index, std::uint64_t seed);

/// Independent chains seeded base_seed + i. Failures are recorded per chain.
RunLog run_chains(const TrainingProblem& problem, std::size_t n_chains, const ChainConfig& config,
                  std::uint64_t base_seed, std::size_t threads = 1);

/// Optimises the log-posterior (SGHMC at T = 0, i.e. SGD with momentum).
ParamVector fit_map(const TrainingProblem& problem, ParamVector init, std::size_t epochs,
                    double learning_rate, double friction, std::size_t batch_size,
                    std::uint64_t seed);

/// Standard deviation of the per-coordinate injected noise.
inline double sghmc_noise_stddev(double temperature, double friction, double step_size) {
  return std::sqrt(2.0 * temperature * friction * step_size);
}

}  // namespace dirclip
