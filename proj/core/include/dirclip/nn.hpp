#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dirclip/rng.hpp"

namespace dirclip {

enum class Activation { ReLU };

/// One dense layer inside the flat parameter vector. Weights are stored
/// row-major as (out x in), followed by the `out` biases.
struct LayerSlice {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

struct NetworkConfig {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden_layers;
  std::size_t num_classes = 2;
  Activation activation = Activation::ReLU;

  /// Throws ConfigError unless K >= 2 and every width is >= 1.
  void validate() const;
  std::vector<LayerSlice> layout() const;
  std::size_t param_count() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

class ParamVector {
 public:
  ParamVector() = default;
  /// Zero-initialised parameters for `config`.
  explicit ParamVector(const NetworkConfig& config);
  /// Throws DimensionError if `values.size()` does not match `config`.
  ParamVector(const NetworkConfig& config, std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  const std::vector<LayerSlice>& layout() const noexcept { return layout_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> biases(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;

  bool all_finite() const;

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  std::vector<LayerSlice> layout_;
};

/// Dense row-major matrix of inputs (one example per row).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Prediction {
  std::vector<double> logits;
  std::vector<double> log_probs;

  std::vector<double> probs() const;
  std::size_t argmax() const;
};

/// Numerically stable logsoftmax.
std::vector<double> log_softmax(std::span<const double> logits);

/// Forward pass for every row of `inputs`.
std::vector<Prediction> forward(const NetworkConfig& config, const ParamVector& params,
                                const Matrix& inputs);

Prediction forward_one(const NetworkConfig& config, const ParamVector& params,
                       std::span<const double> input);

/// Weights ~ Normal(0, 1/fan_in), biases 0.
ParamVector init_params(const NetworkConfig& config, Rng& rng);

/// Throws DimensionError when params/inputs do not match `config`.
void check_shapes(const NetworkConfig& config, const ParamVector& params, const Matrix& inputs);

}  // namespace dirclip
