#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dirclip/nn.hpp"
#include "dirclip/priors.hpp"

namespace dirclip {

/// A point on the (K-1)-simplex.
class SimplexPoint {
 public:
  /// Throws ConfigError unless probs are non-negative and sum to 1 (+-1e-12).
  explicit SimplexPoint(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }
  double sum_sq() const;

 private:
  std::vector<double> probs_;
};

/// Gradient of a log-density w.r.t. log-probabilities.
struct GradientField {
  std::vector<double> g;

  double sum() const;
};

GradientField dirichlet_prior_gradient(std::size_t num_classes, double alpha);
GradientField categorical_gradient(std::size_t num_classes, std::size_t label);
/// Dirichlet prior times categorical likelihood: alpha_tilde - 1.
GradientField dirichlet_posterior_gradient(std::size_t num_classes, double alpha, std::size_t label);

/// Change of log(y_hat_y) under an infinitesimal gradient-ascent step in
/// logit space, divided by the step size:
///   g_y - g+ y_y - y.g + g+ sum(y^2)
double true_class_update(const SimplexPoint& point, const GradientField& field, std::size_t label);

/// (K - 2) / K. Worst-case (prediction concentrated on a wrong class) limit
/// of the true-class update condition; an approximation away from corners.
double critical_alpha(std::size_t num_classes);

/// One wrong class receives probability p, the remaining K-1 classes
/// (including the true one) share 1 - p equally.
SimplexPoint one_wrong_class_point(std::size_t num_classes, double p_wrong, std::size_t label,
                                   std::size_t wrong);

struct PhaseDiagram {
  std::size_t num_classes = 0;
  std::vector<double> alphas;
  std::vector<double> wrong_probs;
  /// alphas.size() x wrong_probs.size(), alpha-major.
  std::vector<double> values;

  double at(std::size_t alpha_index, std::size_t prob_index) const {
    return values[alpha_index * wrong_probs.size() + prob_index];
  }
  /// Smallest grid alpha from which every cell (this and all larger alphas)
  /// is positive; NaN when no such alpha exists in the grid.
  double boundary_alpha() const;
};

PhaseDiagram phase_diagram(std::size_t num_classes, std::span<const double> alphas,
                           std::span<const double> wrong_probs);

std::vector<double> linspace(double lo, double hi, std::size_t n);
std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t n);

// ---------------------------------------------------------------------------
// Gradient flow on the simplex

enum class FlowDensity { Prior, Likelihood, Posterior };

struct FlowOptions {
  std::size_t num_classes = 3;
  FlowDensity density = FlowDensity::Posterior;
  double alpha = 0.5;
  std::size_t label = 0;
  std::size_t n_particles = 50;
  double step_size = 0.05;
  std::size_t n_steps = 4000;
  /// Trajectory points are kept every `record_every` steps (and at the end).
  std::size_t record_every = 20;
  std::uint64_t seed = 0;
};

struct FlowResult {
  /// particle -> recorded points -> probabilities
  std::vector<std::vector<std::vector<double>>> trajectories;
  /// Fraction of particles whose final argmax is each class.
  std::vector<double> corner_fraction;
  double wrong_corner_fraction = 0.0;
  std::size_t clamp_events = 0;
  /// max_t |sum(exp(log y_hat)) - 1| over all particles and steps.
  double max_simplex_error = 0.0;
};

/// Particles start uniformly on the simplex and follow logit-space gradient
/// ascent z += eps (g - g+ y_hat); logits are centred and clamped to +-40.
FlowResult simplex_flow(const FlowOptions& options);

/// Exact sample from Dirichlet(alpha + 1[k = label]) by rejection from a
/// Dirichlet proposal; returns the fraction of samples with y_hat_label < 0.5.
double dirichlet_posterior_low_true_mass(std::size_t num_classes, double alpha,
                                         std::size_t label, std::size_t n_samples,
                                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Confidence prior CDFs

/// Log of the confidence prior times the untempered likelihood, with its
/// lower bound (cold likelihood) and upper bound (remaining mass on a single
/// class).
struct ConfidenceBounds {
  double lower;
  double product;
  double upper;
};

ConfidenceBounds confidence_bounds(std::span<const double> log_probs, std::size_t label,
                                   double temperature);

/// Cold likelihood y^(1/T) on [0, 1], unnormalised.
double cold_likelihood_density(double z, double temperature);
/// Upper bound max(y, 1-y)^(1/T - 1) * y on [0, 1], unnormalised.
double upper_bound_density(double z, double temperature);

/// z^(1 + 1/T)
double cdf_cold(double z, double temperature);
/// Normalised CDF of upper_bound_density; two branches split at z = 1/2,
/// evaluated without forming 2^(1/T).
double cdf_upper_bound(double z, double temperature);

/// 1-Wasserstein distance as the integral of |F_cold - F_up| over [0, 1]
/// (trapezoid rule on `nodes` uniform nodes).
double wasserstein_cold_vs_upper(double temperature, std::size_t nodes = 100000);
std::vector<double> wasserstein_curve(std::span<const double> temperatures,
                                      std::size_t nodes = 100000);

struct RejectionSample {
  std::vector<double> samples;  // sorted ascending
  std::size_t proposals = 0;
};

/// Rejection sampling on [0, 1] with a uniform proposal; `bound` must dominate
/// `density` on [0, 1].
RejectionSample rejection_sample_unit(const std::function<double(double)>& density, double bound,
                                      std::size_t n_samples, std::uint64_t seed);

/// sup_x |F_empirical(x) - F(x)| for sorted samples.
double ks_distance(std::span<const double> sorted_samples, const std::function<double(double)>& cdf);

// ---------------------------------------------------------------------------
// Divergence slices

struct SlicePoint {
  double theta;
  double prior_logpdf;      // sum over examples of the prediction prior
  double posterior_logpdf;  // prior + categorical log-likelihood
};

/// Varies the output-layer bias `bias_index` of `params` over `thetas`
/// (values replace the bias) and evaluates the prior/posterior summed over
/// `inputs`. NormalParams evaluates the parameter prior of the full vector.
std::vector<SlicePoint> divergence_slice(const NetworkConfig& config, const ParamVector& params,
                                         const Matrix& inputs, std::span<const std::size_t> labels,
                                         std::size_t bias_index, std::span<const double> thetas,
                                         const PriorSpec& prior);

/// Analytic upper bound on a DirClip prior summed over `n_examples`.
double dirclip_total_bound(std::size_t n_examples, std::size_t num_classes, double alpha, double clip);

}  // namespace dirclip
