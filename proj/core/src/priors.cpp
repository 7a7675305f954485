#include "dirclip/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dirclip/error.hpp"

namespace dirclip {

namespace {

void require_finite(double value, const char* term) {
  if (!std::isfinite(value)) throw NumericalError(term, std::to_string(value));
}

bool has(std::span<double> grad) { return !grad.empty(); }

}  // namespace

PriorSpec PriorSpec::normal(double sigma) {
  PriorSpec p;
  p.family = PriorFamily::NormalParams;
  p.sigma = sigma;
  return p;
}
PriorSpec PriorSpec::dirichlet(double alpha) {
  PriorSpec p;
  p.family = PriorFamily::Dirichlet;
  p.alpha = alpha;
  return p;
}
PriorSpec PriorSpec::dirclip(double alpha, double clip) {
  PriorSpec p;
  p.family = PriorFamily::DirClip;
  p.alpha = alpha;
  p.clip = clip;
  return p;
}
PriorSpec PriorSpec::ndg(double alpha) {
  PriorSpec p;
  p.family = PriorFamily::NDG;
  p.alpha = alpha;
  return p;
}
PriorSpec PriorSpec::confidence(double temperature) {
  PriorSpec p;
  p.family = PriorFamily::Confidence;
  p.temperature = temperature;
  return p;
}

void PriorSpec::validate() const {
  switch (family) {
    case PriorFamily::Uniform:
      break;
    case PriorFamily::NormalParams:
      if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("normal prior: sigma must be > 0");
      break;
    case PriorFamily::Dirichlet:
    case PriorFamily::NDG:
      if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError(to_string(family) + " prior: alpha must be > 0");
      }
      break;
    case PriorFamily::DirClip:
      if (!std::isfinite(alpha)) throw ConfigError("dirclip prior: alpha must be finite");
      if (!(clip < 0.0) || !std::isfinite(clip)) throw ConfigError("dirclip prior: clip must be < 0");
      break;
    case PriorFamily::Confidence:
      if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ConfigError("confidence prior: temperature must be > 0");
      }
      break;
  }
}

void PosteriorSpec::validate() const {
  param_prior.validate();
  if (param_prior.family != PriorFamily::NormalParams &&
      param_prior.family != PriorFamily::Uniform) {
    throw ConfigError("posterior.param_prior must be normal or uniform");
  }
  if (prediction_prior) {
    prediction_prior->validate();
    if (prediction_prior->applies_to() != AppliesTo::Predictions) {
      throw ConfigError("posterior.prediction_prior must be a prior over predictions");
    }
  }
  if (likelihood.kind == LikelihoodKind::NDGQuadratic &&
      (!(likelihood.ndg_alpha > 0.0) || !std::isfinite(likelihood.ndg_alpha))) {
    throw ConfigError("posterior.likelihood: ndg alpha must be > 0");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("posterior.temperature must be > 0");
  }
}

std::vector<std::string> PosteriorSpec::warnings() const {
  std::vector<std::string> out;
  if (prediction_prior && prediction_prior->family == PriorFamily::Dirichlet &&
      prediction_prior->alpha < 1.0) {
    out.emplace_back(
        "improper_posterior: unclipped Dirichlet prior over predictions is unbounded in "
        "parameter space");
  }
  if (prediction_prior && prediction_prior->family == PriorFamily::DirClip &&
      prediction_prior->alpha > 1.0) {
    out.emplace_back("dirclip_alpha_above_one: clipping bounds the density from below");
  }
  return out;
}

NdgParams NdgParams::make(std::size_t num_classes, double alpha, std::size_t label) {
  NdgParams p;
  p.alpha_tilde.resize(num_classes);
  p.mu.resize(num_classes);
  p.sigma.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    p.alpha_tilde[k] = alpha + (k == label ? 1.0 : 0.0);
    p.sigma[k] = std::log(1.0 / p.alpha_tilde[k] + 1.0);
  }
  const double sy = p.sigma[label];
  const double log_ay = std::log(p.alpha_tilde[label]);
  for (std::size_t k = 0; k < num_classes; ++k) {
    // mu_y == 0 by construction
    p.mu[k] = (k == label) ? 0.0
                           : std::log(p.alpha_tilde[k]) - log_ay + (sy * sy - p.sigma[k] * p.sigma[k]) / 2.0;
  }
  return p;
}

NdgFactorCoefficients NdgFactorCoefficients::make(double alpha) {
  // A 2-class NdgParams has exactly one true and one wrong class.
  const NdgParams p = NdgParams::make(2, alpha, 1);
  return from_moments(p.mu[0], p.sigma[0], p.mu[1], p.sigma[1]);
}

NdgFactorCoefficients NdgFactorCoefficients::from_moments(double mu0, double sigma0, double mu1,
                                                          double sigma1) {
  NdgFactorCoefficients c{mu0, sigma0, mu1, sigma1, 0.0, 0.0};
  const double s0 = c.sigma0 * c.sigma0;
  const double s1 = c.sigma1 * c.sigma1;
  c.linear = (s0 * c.mu1 - s1 * c.mu0) / (s0 * s1);
  c.quadratic = (s1 - s0) / (2.0 * s0 * s1);
  return c;
}

double dirichlet_logpdf(std::span<const double> log_probs, double alpha) {
  double acc = 0.0;
  for (double l : log_probs) acc += l;
  return (alpha - 1.0) * acc;
}

double dirclip_logpdf(std::span<const double> log_probs, double alpha, double clip) {
  double acc = 0.0;
  for (double l : log_probs) acc += std::max(l, clip);
  return (alpha - 1.0) * acc;
}

double ndg_logpdf(std::span<const double> log_probs, double alpha, std::size_t label) {
  const NdgParams p = NdgParams::make(log_probs.size(), alpha, label);
  double acc = 0.0;
  for (std::size_t k = 0; k < log_probs.size(); ++k) {
    const double r = (log_probs[k] - p.mu[k]) / p.sigma[k];
    acc -= 0.5 * r * r;
  }
  return acc;
}

NdgFactors ndg_factorized(std::span<const double> log_probs, double alpha, std::size_t label) {
  const auto c = NdgFactorCoefficients::make(alpha);
  double prior = 0.0;
  for (double l : log_probs) {
    const double r = (l - c.mu0) / c.sigma0;
    prior -= 0.5 * r * r;
  }
  const double ly = log_probs[label];
  return {prior, c.linear * ly + c.quadratic * ly * ly};
}

double confidence_logpdf(std::span<const double> log_probs, double temperature) {
  const double top = *std::max_element(log_probs.begin(), log_probs.end());
  return (1.0 / temperature - 1.0) * top;
}

double prediction_prior_logpdf(const PriorSpec& prior, std::span<const double> log_probs,
                               std::span<double> grad) {
  switch (prior.family) {
    case PriorFamily::Uniform:
      return 0.0;
    case PriorFamily::Dirichlet: {
      if (has(grad)) {
        for (double& g : grad) g += prior.alpha - 1.0;
      }
      return dirichlet_logpdf(log_probs, prior.alpha);
    }
    case PriorFamily::DirClip: {
      if (has(grad)) {
        // Flat on the clipped branch: subgradient 0.
        for (std::size_t k = 0; k < log_probs.size(); ++k) {
          if (log_probs[k] > prior.clip) grad[k] += prior.alpha - 1.0;
        }
      }
      return dirclip_logpdf(log_probs, prior.alpha, prior.clip);
    }
    case PriorFamily::NDG: {
      const auto c = NdgFactorCoefficients::make(prior.alpha);
      double acc = 0.0;
      const double inv_var = 1.0 / (c.sigma0 * c.sigma0);
      for (std::size_t k = 0; k < log_probs.size(); ++k) {
        const double d = log_probs[k] - c.mu0;
        acc -= 0.5 * d * d * inv_var;
        if (has(grad)) grad[k] -= d * inv_var;
      }
      return acc;
    }
    case PriorFamily::Confidence: {
      const auto top = std::max_element(log_probs.begin(), log_probs.end());
      const double coef = 1.0 / prior.temperature - 1.0;
      if (has(grad)) grad[static_cast<std::size_t>(top - log_probs.begin())] += coef;
      return coef * *top;
    }
    case PriorFamily::NormalParams:
      break;
  }
  throw ConfigError("normal prior cannot be evaluated over predictions");
}

double likelihood_logpdf(const LikelihoodSpec& likelihood, std::span<const double> log_probs,
                         std::size_t label, std::span<double> grad) {
  if (label >= log_probs.size()) throw DimensionError("label index bound", log_probs.size(), label);
  switch (likelihood.kind) {
    case LikelihoodKind::Categorical:
      if (has(grad)) grad[label] += 1.0;
      return log_probs[label];
    case LikelihoodKind::NDGQuadratic: {
      const auto c = NdgFactorCoefficients::make(likelihood.ndg_alpha);
      const double ly = log_probs[label];
      if (has(grad)) grad[label] += c.linear + 2.0 * c.quadratic * ly;
      return c.linear * ly + c.quadratic * ly * ly;
    }
    case LikelihoodKind::None:
      return 0.0;
  }
  return 0.0;
}

double observation_logpdf(const PosteriorSpec& spec, std::span<const double> log_probs,
                          std::size_t label, std::span<double> grad) {
  double value = 0.0;
  if (spec.prediction_prior) {
    const double p = prediction_prior_logpdf(*spec.prediction_prior, log_probs, grad);
    require_finite(p, "prediction prior");
    value += p;
  }
  const double l = likelihood_logpdf(spec.likelihood, log_probs, label, grad);
  require_finite(l, "likelihood");
  return value + l;
}

double param_prior_logpdf(const PriorSpec& prior, std::span<const double> params,
                          std::span<double> grad) {
  if (prior.family == PriorFamily::Uniform) return 0.0;
  if (prior.family != PriorFamily::NormalParams) {
    throw ConfigError("parameter prior must be normal or uniform");
  }
  const double inv_var = 1.0 / (prior.sigma * prior.sigma);
  double acc = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    acc += params[i] * params[i];
    if (has(grad)) grad[i] -= params[i] * inv_var;
  }
  const double value = -0.5 * acc * inv_var;
  require_finite(value, "parameter prior");
  return value;
}

double assemble_log_posterior(const PosteriorSpec& spec, std::span<const Prediction> predictions,
                              std::span<const std::size_t> labels, const ParamVector& params) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("labels", predictions.size(), labels.size());
  }
  double total = param_prior_logpdf(spec.param_prior, params.values());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total += observation_logpdf(spec, predictions[i].log_probs, labels[i]);
  }
  return total / spec.temperature;
}

std::string to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::Uniform: return "uniform";
    case PriorFamily::NormalParams: return "normal";
    case PriorFamily::Dirichlet: return "dirichlet";
    case PriorFamily::DirClip: return "dirclip";
    case PriorFamily::NDG: return "ndg";
    case PriorFamily::Confidence: return "confidence";
  }
  return "unknown";
}

std::string to_string(LikelihoodKind kind) {
  switch (kind) {
    case LikelihoodKind::Categorical: return "categorical";
    case LikelihoodKind::NDGQuadratic: return "ndg_quadratic";
    case LikelihoodKind::None: return "none";
  }
  return "unknown";
}

}  // namespace dirclip
