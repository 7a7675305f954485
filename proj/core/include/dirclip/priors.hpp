#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirclip/nn.hpp"

// All densities here are unnormalised log-densities. Anything over
// predictions takes a vector of log-probabilities log(y_hat) of length K;
// labels are 0-based class indices.

namespace dirclip {

enum class PriorFamily { Uniform, NormalParams, Dirichlet, DirClip, NDG, Confidence };
enum class AppliesTo { Parameters, Predictions };

struct PriorSpec {
  PriorFamily family = PriorFamily::Uniform;
  double sigma = 1.0;        // NormalParams
  double alpha = 1.0;        // Dirichlet, DirClip, NDG
  double clip = -10.0;       // DirClip, must be < 0
  double temperature = 1.0;  // Confidence

  static PriorSpec uniform() { return {}; }
  static PriorSpec normal(double sigma);
  static PriorSpec dirichlet(double alpha);
  static PriorSpec dirclip(double alpha, double clip);
  static PriorSpec ndg(double alpha);
  static PriorSpec confidence(double temperature);

  AppliesTo applies_to() const noexcept {
    return family == PriorFamily::NormalParams ? AppliesTo::Parameters : AppliesTo::Predictions;
  }
  void validate() const;
};

enum class LikelihoodKind { Categorical, NDGQuadratic, None };

struct LikelihoodSpec {
  LikelihoodKind kind = LikelihoodKind::Categorical;
  double ndg_alpha = 1.0;  // only read by NDGQuadratic
};

/// (1/T) * [log p(theta) + sum_i (log p(y_hat_i) + log p(y_i | y_hat_i))]
struct PosteriorSpec {
  PriorSpec param_prior = PriorSpec::normal(1.0);
  std::optional<PriorSpec> prediction_prior;
  LikelihoodSpec likelihood;
  double temperature = 1.0;

  void validate() const;
  /// Non-fatal configuration warnings, e.g. an improper Dirichlet posterior.
  std::vector<std::string> warnings() const;
};

/// Per-class Normal parameters of the NDG density over log-probabilities.
struct NdgParams {
  std::vector<double> alpha_tilde;
  std::vector<double> mu;
  std::vector<double> sigma;

  static NdgParams make(std::size_t num_classes, double alpha, std::size_t label);
};

/// Coefficients of the NDG posterior split into a label-free prior over all
/// log-probabilities and a quadratic term in log(y_hat_y).
struct NdgFactorCoefficients {
  double mu0, sigma0;  // wrong classes
  double mu1, sigma1;  // true class
  double linear;       // coefficient of log(y_hat_y)
  double quadratic;    // coefficient of log(y_hat_y)^2

  static NdgFactorCoefficients make(double alpha);
  static NdgFactorCoefficients from_moments(double mu0, double sigma0, double mu1, double sigma1);
};

struct NdgFactors {
  double prior_term;
  double likelihood_term;
};

double dirichlet_logpdf(std::span<const double> log_probs, double alpha);
double dirclip_logpdf(std::span<const double> log_probs, double alpha, double clip);
double ndg_logpdf(std::span<const double> log_probs, double alpha, std::size_t label);
NdgFactors ndg_factorized(std::span<const double> log_probs, double alpha, std::size_t label);
double confidence_logpdf(std::span<const double> log_probs, double temperature);

/// Prediction-space prior. Adds d/d(log_probs) into `grad` when non-empty.
double prediction_prior_logpdf(const PriorSpec& prior, std::span<const double> log_probs,
                               std::span<double> grad = {});

double likelihood_logpdf(const LikelihoodSpec& likelihood, std::span<const double> log_probs,
                         std::size_t label, std::span<double> grad = {});

/// Prediction prior plus likelihood for one observation, untempered.
double observation_logpdf(const PosteriorSpec& spec, std::span<const double> log_probs,
                          std::size_t label, std::span<double> grad = {});

/// Parameter-space prior; adds its gradient into `grad` when non-empty.
double param_prior_logpdf(const PriorSpec& prior, std::span<const double> params,
                          std::span<double> grad = {});

double assemble_log_posterior(const PosteriorSpec& spec, std::span<const Prediction> predictions,
                              std::span<const std::size_t> labels, const ParamVector& params);

std::string to_string(PriorFamily family);
std::string to_string(LikelihoodKind kind);

}  // namespace dirclip
