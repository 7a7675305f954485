#include "dirclip/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

#include "dirclip/error.hpp"
#include "dirclip/log_density.hpp"
#include "dirclip/rng.hpp"

namespace dirclip {

namespace {

// Stream identifiers for Rng::keyed.
constexpr std::uint64_t kHmcStream = 1;
constexpr std::uint64_t kSghmcNoiseStream = 2;
constexpr std::uint64_t kMomentumStream = 3;
constexpr std::uint64_t kInitStream = 4;
constexpr std::uint64_t kShuffleStream = 5;

double half_sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return 0.5 * s;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

HmcResult hmc_sample(const LogDensityFn& target, std::span<const double> init,
                     const HmcOptions& options) {
  if (!(options.step_size > 0.0)) throw ConfigError("hmc: step_size must be > 0");
  const std::size_t dim = init.size();
  std::vector<double> theta(init.begin(), init.end());
  std::vector<double> grad(dim, 0.0);
  double logp = target(theta, grad);
  if (!std::isfinite(logp) || !all_finite(grad)) {
    throw NumericalError("hmc initial state", "log-density or gradient is not finite");
  }

  HmcResult result;
  result.samples.reserve(options.n_samples);
  std::vector<double> q(dim), p(dim), g(dim);
  const double eps = options.step_size;
  const std::size_t total = options.n_warmup + options.n_samples;

  for (std::size_t s = 0; s < total; ++s) {
    Rng rng = Rng::keyed(options.seed, kHmcStream, s);
    for (double& x : p) x = rng.normal();
    const double current_h = -logp + half_sq_norm(p);
    ++result.proposals;

    if (options.leapfrog_steps == 0) {
      result.energy_errors.push_back(0.0);
      ++result.accepted;
    } else {
      q = theta;
      g = grad;
      double new_logp = logp;
      bool finite = true;
      try {
        for (std::size_t i = 0; i < dim; ++i) p[i] += 0.5 * eps * g[i];
        for (std::size_t step = 0; step < options.leapfrog_steps; ++step) {
          for (std::size_t i = 0; i < dim; ++i) q[i] += eps * p[i];
          new_logp = target(q, g);
          if (!std::isfinite(new_logp)) {
            finite = false;
            break;
          }
          const double w = (step + 1 == options.leapfrog_steps) ? 0.5 * eps : eps;
          for (std::size_t i = 0; i < dim; ++i) p[i] += w * g[i];
        }
      } catch (const NumericalError&) {
        finite = false;
      }
      const double new_h = -new_logp + half_sq_norm(p);
      const double delta_h = new_h - current_h;
      result.energy_errors.push_back(finite ? delta_h : std::numeric_limits<double>::quiet_NaN());
      if (!finite || !std::isfinite(delta_h) || !all_finite(g)) {
        ++result.nonfinite_rejections;
      } else if (std::log(rng.uniform()) < -delta_h) {
        theta.swap(q);
        grad.swap(g);
        logp = new_logp;
        ++result.accepted;
      }
    }
    if (s >= options.n_warmup) result.samples.push_back(theta);
  }
  return result;
}

void Schedule::validate() const {
  if (!(max_lr > 0.0)) throw ConfigError("schedule.max_lr must be > 0");
  if (!(max_temperature >= 0.0)) throw ConfigError("schedule.max_temperature must be >= 0");
  if (epochs < 1) throw ConfigError("schedule.epochs must be >= 1");
}

ScheduleValue schedule_at(const Schedule& schedule, double f) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw ConfigError("schedule_at: epoch fraction must lie in [0, 1], got " + std::to_string(f));
  }
  ScheduleValue v{};
  if (f <= 1.0 / 3.0) {
    v.temperature = 0.0;
  } else if (f < 2.0 / 3.0) {
    v.temperature = schedule.max_temperature * (3.0 * f - 1.0);
  } else {
    v.temperature = schedule.max_temperature;
  }
  if (f <= 0.5) {
    v.learning_rate = schedule.max_lr;
  } else if (f >= 1.0) {
    v.learning_rate = 0.0;
  } else {
    v.learning_rate = schedule.max_lr * std::cos(std::numbers::pi * (f - 0.5));
  }
  return v;
}

SamplerState SamplerState::start(std::vector<double> params, double step_size, double friction,
                                 double temperature, std::uint64_t seed) {
  SamplerState s;
  s.momentum.resize(params.size());
  Rng rng = Rng::keyed(seed, kMomentumStream, 0);
  for (double& v : s.momentum) v = rng.normal();
  s.params = std::move(params);
  s.step_size = step_size;
  s.friction = friction;
  s.temperature = temperature;
  s.seed = seed;
  return s;
}

void SamplerState::validate() const {
  if (momentum.size() != params.size()) throw DimensionError("sghmc momentum", params.size(), momentum.size());
  if (!(step_size > 0.0)) throw ConfigError("sghmc: step size must be > 0");
  if (!(friction >= 0.0)) throw ConfigError("sghmc: friction must be >= 0");
  if (!(temperature >= 0.0)) throw ConfigError("sghmc: temperature must be >= 0");
  if (step_size * friction > 1.0) {
    throw ConfigError("sghmc: step_size * friction = " + std::to_string(step_size * friction) +
                      " > 1 flips the momentum sign");
  }
}

void sghmc_step(SamplerState& state, std::size_t batch, const MinibatchGradFn& grad_fn) {
  const std::size_t dim = state.params.size();
  const double eps = state.step_size;
  for (std::size_t i = 0; i < dim; ++i) state.params[i] += eps * state.momentum[i];

  std::vector<double> grad(dim, 0.0);
  grad_fn(state.params, batch, grad);

  const double decay = 1.0 - eps * state.friction;
  const double noise_sd = sghmc_noise_stddev(state.temperature, state.friction, eps);
  if (noise_sd > 0.0) {
    Rng rng = Rng::keyed(state.seed, kSghmcNoiseStream, state.step);
    for (std::size_t i = 0; i < dim; ++i) {
      state.momentum[i] = decay * state.momentum[i] + eps * grad[i] + noise_sd * rng.normal();
    }
  } else {
    for (std::size_t i = 0; i < dim; ++i) {
      state.momentum[i] = decay * state.momentum[i] + eps * grad[i];
    }
  }
  ++state.step;
}

SamplerState sghmc_epoch(SamplerState state, std::size_t n_batches, const MinibatchGradFn& grad) {
  state.validate();
  for (std::size_t b = 0; b < n_batches; ++b) sghmc_step(state, b, grad);
  return state;
}

void TrainingProblem::validate() const {
  network.validate();
  posterior.validate();
  if (inputs.cols() != network.input_dim) {
    throw DimensionError("dataset input columns", network.input_dim, inputs.cols());
  }
  if (labels.size() != inputs.rows()) throw DimensionError("dataset labels", inputs.rows(), labels.size());
  for (std::size_t y : labels) {
    if (y >= network.num_classes) throw ConfigError("dataset label " + std::to_string(y) + " >= K");
  }
}

std::vector<ParamVector> RunLog::all_samples() const {
  std::vector<ParamVector> out;
  for (const auto& c : chains) {
    if (c.failure) continue;
    out.insert(out.end(), c.samples.begin(), c.samples.end());
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_minibatches(std::size_t n, std::size_t batch_size,
                                                       std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::keyed(seed, kShuffleStream, epoch);
  // Fisher-Yates; std::shuffle's draw pattern is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

namespace {

MinibatchGradFn network_gradient(const TrainingProblem& problem,
                                 const std::vector<std::vector<std::size_t>>& batches) {
  return [&problem, &batches](std::span<const double> theta, std::size_t b, std::span<double> grad) {
    const ParamVector params(problem.network, std::vector<double>(theta.begin(), theta.end()));
    const auto dg = grad_log_density_minibatch(problem.network, params, problem.inputs,
                                               problem.labels, problem.posterior, batches[b]);
    std::copy(dg.gradient.values().begin(), dg.gradient.values().end(), grad.begin());
  };
}

SamplerState run_cycle(const TrainingProblem& problem, SamplerState state, std::size_t epochs,
                       std::size_t batch_size, const std::function<void(SamplerState&, std::size_t)>& per_epoch) {
  const std::size_t n = problem.inputs.rows();
  for (std::size_t e = 0; e < epochs; ++e) {
    state.epoch_fraction = static_cast<double>(e) / static_cast<double>(epochs);
    per_epoch(state, e);
    const auto batches = make_minibatches(n, batch_size, state.seed, e);
    state = sghmc_epoch(std::move(state), batches.size(), network_gradient(problem, batches));
  }
  state.epoch_fraction = 1.0;
  return state;
}

}  // namespace

ParamVector sghmc_cycle(const TrainingProblem& problem, const SghmcConfig& config, ParamVector init,
                        std::uint64_t seed, std::size_t* nonfinite) {
  config.schedule.validate();
  SamplerState state = SamplerState::start(init.vector(), config.schedule.max_lr, config.friction,
                                           0.0, seed);
  try {
    state = run_cycle(problem, std::move(state), config.schedule.epochs, config.batch_size,
                      [&config](SamplerState& s, std::size_t) {
                        const auto v = schedule_at(config.schedule, s.epoch_fraction);
                        s.step_size = v.learning_rate;
                        s.temperature = v.temperature;
                      });
  } catch (const NumericalError&) {
    if (nonfinite) ++*nonfinite;
    throw;
  }
  return ParamVector(problem.network, std::move(state.params));
}

ParamVector fit_map(const TrainingProblem& problem, ParamVector init, std::size_t epochs,
                    double learning_rate, double friction, std::size_t batch_size, std::uint64_t seed) {
  SamplerState state = SamplerState::start(init.vector(), learning_rate, friction, 0.0, seed);
  std::fill(state.momentum.begin(), state.momentum.end(), 0.0);
  state = run_cycle(problem, std::move(state), epochs, batch_size, [](SamplerState&, std::size_t) {});
  return ParamVector(problem.network, std::move(state.params));
}

ChainResult run_chain(const TrainingProblem& problem, const ChainConfig& config, std::size_t index,
                      std::uint64_t seed) {
  ChainResult result;
  result.index = index;
  result.seed = seed;
  try {
    problem.validate();
    Rng init_rng = Rng::keyed(seed, kInitStream, 0);
    ParamVector init = init_params(problem.network, init_rng);
    if (config.pretrain) {
      const auto& pt = *config.pretrain;
      TrainingProblem fit_problem = problem;
      if (pt.objective == PretrainObjective::MaximumLikelihood) {
        fit_problem.posterior.param_prior = PriorSpec::uniform();
        fit_problem.posterior.prediction_prior.reset();
      }
      fit_problem.posterior.temperature = 1.0;
      init = fit_map(fit_problem, std::move(init), pt.epochs, pt.learning_rate, pt.friction,
                     problem.labels.size(), seed);
      if (!init.all_finite()) throw NumericalError("pretrain", "non-finite parameters");
    }
    if (config.kind == SamplerKind::HMC) {
      HmcOptions opts;
      opts.leapfrog_steps = config.hmc.leapfrog_steps;
      opts.step_size = config.hmc.step_size;
      opts.n_samples = config.hmc.n_samples;
      opts.n_warmup = config.hmc.n_warmup;
      opts.seed = seed;
      LogDensityFn target = [&problem](std::span<const double> theta, std::span<double> grad) {
        const ParamVector params(problem.network, std::vector<double>(theta.begin(), theta.end()));
        const auto dg = grad_log_density(problem.network, params, problem.inputs, problem.labels,
                                         problem.posterior);
        std::copy(dg.gradient.values().begin(), dg.gradient.values().end(), grad.begin());
        return dg.log_density;
      };
      HmcResult hmc = hmc_sample(target, init.values(), opts);
      result.proposals = hmc.proposals;
      result.accepted = hmc.accepted;
      result.nonfinite_events = hmc.nonfinite_rejections;
      if (hmc.proposals > 0 && hmc.nonfinite_rejections == hmc.proposals) {
        throw NumericalError("hmc", "every trajectory diverged");
      }
      result.samples.reserve(hmc.samples.size());
      for (auto& s : hmc.samples) result.samples.emplace_back(problem.network, std::move(s));
    } else {
      result.samples.push_back(
          sghmc_cycle(problem, config.sghmc, std::move(init), seed, &result.nonfinite_events));
    }
  } catch (const std::exception& e) {
    result.failure = e.what();
    result.samples.clear();
  }
  return result;
}

RunLog run_chains(const TrainingProblem& problem, std::size_t n_chains, const ChainConfig& config,
                  std::uint64_t base_seed, std::size_t threads) {
  problem.validate();
  if (n_chains == 0) throw ConfigError("chains must be >= 1");
  RunLog log;
  log.network = problem.network;
  log.base_seed = base_seed;
  log.kind = config.kind;
  log.warnings = problem.posterior.warnings();
  log.chains.resize(n_chains);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n_chains; i = next++) {
      log.chains[i] = run_chain(problem, config, i, base_seed + i);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, n_chains);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return log;
}

}  // namespace dirclip
