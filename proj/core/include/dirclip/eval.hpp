#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dirclip/nn.hpp"

namespace dirclip {

struct Ensemble {
  NetworkConfig config;
  std::vector<ParamVector> samples;

  /// Throws ConfigError if empty, DimensionError if any sample has the wrong size.
  void validate() const;
};

/// Mean of the per-sample class probabilities, N x K.
Matrix posterior_predictive(const Ensemble& ensemble, const Matrix& inputs);

enum class EvalMode { PerSample, Ensemble };

struct Metrics {
  double accuracy = 0.0;
  double mean_log_likelihood = 0.0;
  double mean_confidence = 0.0;
  /// Accuracy of each posterior sample on its own.
  std::vector<double> per_sample_accuracy;
};

/// PerSample averages accuracy, log-likelihood and max-probability over the
/// samples; Ensemble scores the posterior predictive.
Metrics evaluate(const Ensemble& ensemble, const Matrix& inputs,
                 std::span<const std::size_t> labels, EvalMode mode);

struct RHat {
  double value = 1.0;
  /// Within-chain variance was zero; value is 1 by convention.
  bool degenerate = false;
};

/// Split R-hat. Needs >= 2 chains of equal length >= 4.
RHat r_hat(const std::vector<std::vector<double>>& chains);

/// Max split R-hat over parameter coordinates. chains[c][s] is sample s of chain c.
RHat parameter_space_r_hat(const std::vector<std::vector<ParamVector>>& chains);

/// Max split R-hat over the predicted probability of every class at every
/// row of `inputs`.
RHat function_space_r_hat(const NetworkConfig& config,
                          const std::vector<std::vector<ParamVector>>& chains,
                          const Matrix& inputs);

struct SweepPoint {
  double scale;
  double mean_confidence;
};

/// Draws every parameter from Normal(0, scale^2) and records the mean max
/// predicted probability over `inputs` and the draws.
std::vector<SweepPoint> prior_confidence_sweep(const NetworkConfig& config,
                                               std::span<const double> scales,
                                               std::size_t n_prior_samples, const Matrix& inputs,
                                               std::uint64_t seed);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

struct BoundingBox {
  double x_min, x_max, y_min, y_max;
};

struct BoundaryGrid {
  std::size_t nx = 0, ny = 0;
  /// Row-major over (iy, ix): one 2D point per row.
  Matrix points;
  /// Ensemble probabilities, one row per point.
  Matrix probs;
};

BoundaryGrid decision_boundary_grid(const Ensemble& ensemble, const BoundingBox& box,
                                    std::size_t resolution);

enum class CdfSelector { AllClasses, TrueClass };

struct CdfTable {
  /// Sorted distinct log-probabilities and the empirical CDF at each.
  std::vector<double> values;
  std::vector<double> cdf;
};

/// Empirical CDF of per-sample predicted log-probabilities.
CdfTable logprob_cdf(const Ensemble& ensemble, const Matrix& inputs,
                     std::span<const std::size_t> labels, CdfSelector selector);

}  // namespace dirclip
