#include "dirclip/log_density.hpp"

#include <cmath>
#include <numeric>

#include "dirclip/error.hpp"
#include "mlp_detail.hpp"

namespace dirclip {

namespace {

DensityGradient accumulate(const NetworkConfig& config, const ParamVector& params,
                           const Matrix& inputs, std::span<const std::size_t> labels,
                           const PosteriorSpec& posterior, std::span<const std::size_t> rows,
                           double data_scale) {
  check_shapes(config, params, inputs);
  if (labels.size() != inputs.rows()) throw DimensionError("labels", inputs.rows(), labels.size());

  DensityGradient out{0.0, ParamVector(config)};
  std::span<double> grad = out.gradient.values();
  const std::size_t k = config.num_classes;

  // Per-observation terms are accumulated unscaled and scaled once at the end.
  std::vector<double> obs_grad(params.size(), 0.0);
  double obs_total = 0.0;
  detail::ForwardCache cache;
  std::vector<double> dlogp(k);
  std::vector<double> dlogits(k);
  for (std::size_t r : rows) {
    detail::forward_cached(params.layout(), params.values(), inputs.row(r), cache);
    const std::vector<double> log_probs = log_softmax(cache.pre.back());
    std::fill(dlogp.begin(), dlogp.end(), 0.0);
    obs_total += observation_logpdf(posterior, log_probs, labels[r], dlogp);
    // Through logsoftmax: dz_j = g_j - y_hat_j * sum(g).
    const double gsum = std::accumulate(dlogp.begin(), dlogp.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) dlogits[j] = dlogp[j] - std::exp(log_probs[j]) * gsum;
    detail::backward(params.layout(), params.values(), cache, dlogits, obs_grad);
  }

  const double prior = param_prior_logpdf(posterior.param_prior, params.values(), grad);
  const double inv_t = 1.0 / posterior.temperature;
  out.log_density = (prior + data_scale * obs_total) * inv_t;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = (grad[i] + data_scale * obs_grad[i]) * inv_t;
  }
  if (!std::isfinite(out.log_density)) throw NumericalError("log posterior", std::to_string(out.log_density));
  if (!out.gradient.all_finite()) throw NumericalError("log posterior gradient", "non-finite entry");
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

DensityGradient grad_log_density(const NetworkConfig& config, const ParamVector& params,
                                 const Matrix& inputs, std::span<const std::size_t> labels,
                                 const PosteriorSpec& posterior) {
  const auto rows = all_rows(inputs.rows());
  return accumulate(config, params, inputs, labels, posterior, rows, 1.0);
}

DensityGradient grad_log_density_minibatch(const NetworkConfig& config, const ParamVector& params,
                                           const Matrix& inputs,
                                           std::span<const std::size_t> labels,
                                           const PosteriorSpec& posterior,
                                           std::span<const std::size_t> batch) {
  if (batch.empty()) throw ConfigError("minibatch must not be empty");
  for (std::size_t r : batch) {
    if (r >= inputs.rows()) throw DimensionError("minibatch row index bound", inputs.rows(), r);
  }
  const double scale = static_cast<double>(inputs.rows()) / static_cast<double>(batch.size());
  return accumulate(config, params, inputs, labels, posterior, batch, scale);
}

double log_density(const NetworkConfig& config, const ParamVector& params, const Matrix& inputs,
                   std::span<const std::size_t> labels, const PosteriorSpec& posterior) {
  const auto preds = forward(config, params, inputs);
  return assemble_log_posterior(posterior, preds, labels, params);
}

}  // namespace dirclip
