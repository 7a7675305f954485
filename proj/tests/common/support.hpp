#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dirclip/nn.hpp"
#include "dirclip/rng.hpp"

namespace dirclip::support {

/// Log-probabilities from random logits with a random overall scale, so that
/// both near-uniform and very confident predictions show up.
inline std::vector<double> random_log_probs(Rng& rng, std::size_t k, double max_scale = 6.0) {
  const double scale = max_scale * rng.uniform();
  std::vector<double> z(k);
  for (auto& v : z) v = scale * rng.normal();
  return log_softmax(z);
}

inline std::vector<double> exp_all(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]);
  return out;
}

/// Central differences of f at x with step h.
inline std::vector<double> central_diff(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline Matrix random_inputs(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace dirclip::support
