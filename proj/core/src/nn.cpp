#include "dirclip/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dirclip/error.hpp"
#include "mlp_detail.hpp"

namespace dirclip {

void NetworkConfig::validate() const {
  if (input_dim < 1) throw ConfigError("network.input_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("network.num_classes must be >= 2");
  for (std::size_t w : hidden_layers) {
    if (w < 1) throw ConfigError("network.hidden_layers: every width must be >= 1");
  }
}

std::vector<LayerSlice> NetworkConfig::layout() const {
  std::vector<LayerSlice> layers;
  std::size_t in = input_dim;
  std::size_t offset = 0;
  auto push = [&](std::size_t out) {
    LayerSlice s{in, out, offset, offset + in * out};
    offset = s.bias_offset + out;
    layers.push_back(s);
    in = out;
  };
  for (std::size_t w : hidden_layers) push(w);
  push(num_classes);
  return layers;
}

std::size_t NetworkConfig::param_count() const {
  const auto layers = layout();
  return layers.back().bias_offset + layers.back().out;
}

ParamVector::ParamVector(const NetworkConfig& config)
    : values_(config.param_count(), 0.0), layout_(config.layout()) {}

ParamVector::ParamVector(const NetworkConfig& config, std::vector<double> values)
    : values_(std::move(values)), layout_(config.layout()) {
  if (values_.size() != config.param_count()) {
    throw DimensionError("parameter vector", config.param_count(), values_.size());
  }
}

std::span<double> ParamVector::weights(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return std::span<double>(values_).subspan(s.weight_offset, s.in * s.out);
}
std::span<const double> ParamVector::weights(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return std::span<const double>(values_).subspan(s.weight_offset, s.in * s.out);
}
std::span<double> ParamVector::biases(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return std::span<double>(values_).subspan(s.bias_offset, s.out);
}
std::span<const double> ParamVector::biases(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return std::span<const double>(values_).subspan(s.bias_offset, s.out);
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw DimensionError("matrix data", rows * cols, data_.size());
}

std::vector<double> Prediction::probs() const {
  std::vector<double> p(log_probs.size());
  std::transform(log_probs.begin(), log_probs.end(), p.begin(), [](double l) { return std::exp(l); });
  return p;
}

std::size_t Prediction::argmax() const {
  return static_cast<std::size_t>(
      std::distance(log_probs.begin(), std::max_element(log_probs.begin(), log_probs.end())));
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  const double lse = m + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
  return out;
}

namespace detail {

void forward_cached(const std::vector<LayerSlice>& layout, std::span<const double> params,
                    std::span<const double> input, ForwardCache& cache) {
  const std::size_t n_layers = layout.size();
  cache.pre.resize(n_layers);
  cache.post.resize(n_layers);
  cache.post[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerSlice& s = layout[l];
    const std::vector<double>& a = cache.post[l];
    std::vector<double>& h = cache.pre[l];
    h.resize(s.out);
    for (std::size_t o = 0; o < s.out; ++o) {
      const double* w = params.data() + s.weight_offset + o * s.in;
      double acc = params[s.bias_offset + o];
      for (std::size_t i = 0; i < s.in; ++i) acc += w[i] * a[i];
      h[o] = acc;
    }
    if (l + 1 < n_layers) {
      std::vector<double>& next = cache.post[l + 1];
      next.resize(s.out);
      for (std::size_t o = 0; o < s.out; ++o) next[o] = h[o] > 0.0 ? h[o] : 0.0;
    }
  }
}

void backward(const std::vector<LayerSlice>& layout, std::span<const double> params,
              const ForwardCache& cache, std::span<const double> dlogits, std::span<double> grad) {
  std::vector<double> delta(dlogits.begin(), dlogits.end());
  std::vector<double> prev;
  for (std::size_t l = layout.size(); l-- > 0;) {
    const LayerSlice& s = layout[l];
    const std::vector<double>& a = cache.post[l];
    for (std::size_t o = 0; o < s.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = grad.data() + s.weight_offset + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) gw[i] += d * a[i];
      grad[s.bias_offset + o] += d;
    }
    if (l == 0) break;
    prev.assign(s.in, 0.0);
    for (std::size_t o = 0; o < s.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = params.data() + s.weight_offset + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) prev[i] += w[i] * d;
    }
    // ReLU'(0) := 0
    const std::vector<double>& h = cache.pre[l - 1];
    for (std::size_t i = 0; i < s.in; ++i) {
      if (!(h[i] > 0.0)) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
}

}  // namespace detail

void check_shapes(const NetworkConfig& config, const ParamVector& params, const Matrix& inputs) {
  if (params.size() != config.param_count()) {
    throw DimensionError("parameter vector", config.param_count(), params.size());
  }
  if (inputs.cols() != config.input_dim) {
    throw DimensionError("input columns", config.input_dim, inputs.cols());
  }
}

Prediction forward_one(const NetworkConfig& config, const ParamVector& params,
                       std::span<const double> input) {
  if (input.size() != config.input_dim) {
    throw DimensionError("input row", config.input_dim, input.size());
  }
  if (params.size() != config.param_count()) {
    throw DimensionError("parameter vector", config.param_count(), params.size());
  }
  detail::ForwardCache cache;
  detail::forward_cached(params.layout(), params.values(), input, cache);
  Prediction p;
  p.logits = std::move(cache.pre.back());
  p.log_probs = log_softmax(p.logits);
  return p;
}

std::vector<Prediction> forward(const NetworkConfig& config, const ParamVector& params,
                                const Matrix& inputs) {
  check_shapes(config, params, inputs);
  std::vector<Prediction> out;
  out.reserve(inputs.rows());
  detail::ForwardCache cache;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    detail::forward_cached(params.layout(), params.values(), inputs.row(r), cache);
    Prediction p;
    p.logits = cache.pre.back();
    p.log_probs = log_softmax(p.logits);
    out.push_back(std::move(p));
  }
  return out;
}

ParamVector init_params(const NetworkConfig& config, Rng& rng) {
  config.validate();
  ParamVector params(config);
  for (std::size_t l = 0; l < params.layout().size(); ++l) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(params.layout()[l].in));
    for (double& w : params.weights(l)) w = sd * rng.normal();
  }
  return params;
}

}  // namespace dirclip
