#pragma once

#include <span>
#include <vector>

#include "dirclip/nn.hpp"
#include "dirclip/priors.hpp"

namespace dirclip {

struct DensityGradient {
  double log_density = 0.0;
  ParamVector gradient;
};

/// Full-batch log-posterior and its gradient w.r.t. every parameter,
/// computed by reverse-mode backpropagation through the MLP.
DensityGradient grad_log_density(const NetworkConfig& config, const ParamVector& params,
                                 const Matrix& inputs, std::span<const std::size_t> labels,
                                 const PosteriorSpec& posterior);

/// Unbiased minibatch estimate: prior term plus (N / |batch|) times the
/// per-observation terms of the rows listed in `batch`.
DensityGradient grad_log_density_minibatch(const NetworkConfig& config, const ParamVector& params,
                                           const Matrix& inputs,
                                           std::span<const std::size_t> labels,
                                           const PosteriorSpec& posterior,
                                           std::span<const std::size_t> batch);

/// Log-posterior only (no gradient); agrees with grad_log_density's value.
double log_density(const NetworkConfig& config, const ParamVector& params, const Matrix& inputs,
                   std::span<const std::size_t> labels, const PosteriorSpec& posterior);

}  // namespace dirclip
