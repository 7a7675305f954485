#include "dirclip/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dirclip/error.hpp"

namespace dirclip {

namespace {

constexpr std::uint64_t kSweepStream = 12;

void check_labels(const Matrix& inputs, std::span<const std::size_t> labels, std::size_t k) {
  if (labels.size() != inputs.rows()) throw DimensionError("labels", inputs.rows(), labels.size());
  for (std::size_t y : labels) {
    if (y >= k) throw ConfigError("label " + std::to_string(y) + " out of range");
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
    i = j + 1;
  }
  return r;
}

RHat max_r_hat(const std::vector<std::vector<std::vector<double>>>& per_coord) {
  RHat worst{1.0, true};
  bool any = false;
  for (const auto& chains : per_coord) {
    const RHat r = r_hat(chains);
    if (r.degenerate) continue;
    if (!any || r.value > worst.value) worst = r;
    any = true;
  }
  return worst;
}

}  // namespace

void Ensemble::validate() const {
  config.validate();
  if (samples.empty()) throw ConfigError("ensemble has no samples");
  const std::size_t p = config.param_count();
  for (const auto& s : samples) {
    if (s.size() != p) throw DimensionError("ensemble sample", p, s.size());
  }
}

Matrix posterior_predictive(const Ensemble& ensemble, const Matrix& inputs) {
  ensemble.validate();
  const std::size_t k = ensemble.config.num_classes;
  Matrix out(inputs.rows(), k);
  for (const auto& s : ensemble.samples) {
    const auto preds = forward(ensemble.config, s, inputs);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) out(i, c) += std::exp(preds[i].log_probs[c]);
    }
  }
  const double inv = 1.0 / static_cast<double>(ensemble.samples.size());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) out(i, c) *= inv;
  }
  return out;
}

Metrics evaluate(const Ensemble& ensemble, const Matrix& inputs,
                 std::span<const std::size_t> labels, EvalMode mode) {
  ensemble.validate();
  check_labels(inputs, labels, ensemble.config.num_classes);
  if (inputs.rows() == 0) throw ConfigError("cannot evaluate on an empty dataset");
  const double n = static_cast<double>(inputs.rows());

  Metrics m;
  double ll = 0.0, conf = 0.0;
  for (const auto& s : ensemble.samples) {
    const auto preds = forward(ensemble.config, s, inputs);
    double correct = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& lp = preds[i].log_probs;
      if (argmax(lp) == labels[i]) correct += 1.0;
      ll += lp[labels[i]];
      conf += std::exp(*std::max_element(lp.begin(), lp.end()));
    }
    m.per_sample_accuracy.push_back(correct / n);
  }

  if (mode == EvalMode::PerSample) {
    const double ns = static_cast<double>(ensemble.samples.size());
    m.accuracy = std::accumulate(m.per_sample_accuracy.begin(), m.per_sample_accuracy.end(), 0.0) / ns;
    m.mean_log_likelihood = ll / (ns * n);
    m.mean_confidence = conf / (ns * n);
    return m;
  }

  const Matrix probs = posterior_predictive(ensemble, inputs);
  double correct = 0.0;
  ll = 0.0;
  conf = 0.0;
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const auto row = probs.row(i);
    if (argmax(row) == labels[i]) correct += 1.0;
    ll += std::log(row[labels[i]]);
    conf += *std::max_element(row.begin(), row.end());
  }
  m.accuracy = correct / n;
  m.mean_log_likelihood = ll / n;
  m.mean_confidence = conf / n;
  return m;
}

RHat r_hat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw ConfigError("r_hat needs at least two chains");
  const std::size_t len = chains.front().size();
  if (len < 4) throw ConfigError("r_hat needs chains of length >= 4");
  for (const auto& c : chains) {
    if (c.size() != len) throw DimensionError("r_hat chain length", len, c.size());
  }

  // Split each chain in half (dropping the middle draw for odd lengths).
  const std::size_t half = len / 2;
  std::vector<std::span<const double>> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.data(), half);
    parts.emplace_back(c.data() + len - half, half);
  }
  const double m = static_cast<double>(parts.size());
  const double n = static_cast<double>(half);

  std::vector<double> means;
  double within = 0.0;
  for (auto p : parts) {
    const double mu = std::accumulate(p.begin(), p.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : p) ss += (x - mu) * (x - mu);
    within += ss / (n - 1.0);
    means.push_back(mu);
  }
  within /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (m - 1.0);

  if (!(within > 0.0)) return {1.0, true};
  const double var_plus = (n - 1.0) / n * within + between / n;
  return {std::sqrt(var_plus / within), false};
}

RHat parameter_space_r_hat(const std::vector<std::vector<ParamVector>>& chains) {
  if (chains.empty() || chains.front().empty()) throw ConfigError("r_hat needs non-empty chains");
  const std::size_t p = chains.front().front().size();
  std::vector<std::vector<std::vector<double>>> per_coord(p);
  for (std::size_t j = 0; j < p; ++j) {
    per_coord[j].resize(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      for (const auto& s : chains[c]) {
        if (s.size() != p) throw DimensionError("r_hat sample", p, s.size());
        per_coord[j][c].push_back(s[j]);
      }
    }
  }
  return max_r_hat(per_coord);
}

RHat function_space_r_hat(const NetworkConfig& config,
                          const std::vector<std::vector<ParamVector>>& chains,
                          const Matrix& inputs) {
  if (chains.empty()) throw ConfigError("r_hat needs non-empty chains");
  const std::size_t k = config.num_classes;
  std::vector<std::vector<std::vector<double>>> per_coord(inputs.rows() * k,
                                                          std::vector<std::vector<double>>(chains.size()));
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (const auto& s : chains[c]) {
      const auto preds = forward(config, s, inputs);
      for (std::size_t i = 0; i < preds.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          per_coord[i * k + j][c].push_back(std::exp(preds[i].log_probs[j]));
        }
      }
    }
  }
  return max_r_hat(per_coord);
}

std::vector<SweepPoint> prior_confidence_sweep(const NetworkConfig& config,
                                               std::span<const double> scales,
                                               std::size_t n_prior_samples, const Matrix& inputs,
                                               std::uint64_t seed) {
  config.validate();
  if (n_prior_samples == 0) throw ConfigError("sweep needs at least one prior sample");
  if (inputs.rows() == 0) throw ConfigError("sweep needs at least one input");
  std::vector<SweepPoint> out;
  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double scale = scales[si];
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("prior scales must be positive");
    double conf = 0.0;
    for (std::size_t d = 0; d < n_prior_samples; ++d) {
      // Same standard-normal draws at every scale so the curve is smooth.
      Rng rng = Rng::keyed(seed, kSweepStream, d);
      ParamVector p(config);
      for (auto& v : p.values()) v = scale * rng.normal();
      for (const auto& pred : forward(config, p, inputs)) {
        conf += std::exp(*std::max_element(pred.log_probs.begin(), pred.log_probs.end()));
      }
    }
    out.push_back({scale, conf / static_cast<double>(n_prior_samples * inputs.rows())});
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("spearman", x.size(), y.size());
  if (x.size() < 2) throw ConfigError("spearman needs at least two points");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

BoundaryGrid decision_boundary_grid(const Ensemble& ensemble, const BoundingBox& box,
                                    std::size_t resolution) {
  if (ensemble.config.input_dim != 2) throw ConfigError("decision boundary grid needs 2D inputs");
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
  if (!(box.x_max > box.x_min) || !(box.y_max > box.y_min)) {
    throw ConfigError("bounding box must have positive extent");
  }
  BoundaryGrid g;
  g.nx = g.ny = resolution;
  g.points = Matrix(resolution * resolution, 2);
  const double r = static_cast<double>(resolution - 1);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const std::size_t row = iy * resolution + ix;
      g.points(row, 0) = box.x_min + (box.x_max - box.x_min) * static_cast<double>(ix) / r;
      g.points(row, 1) = box.y_min + (box.y_max - box.y_min) * static_cast<double>(iy) / r;
    }
  }
  g.probs = posterior_predictive(ensemble, g.points);
  return g;
}

CdfTable logprob_cdf(const Ensemble& ensemble, const Matrix& inputs,
                     std::span<const std::size_t> labels, CdfSelector selector) {
  ensemble.validate();
  check_labels(inputs, labels, ensemble.config.num_classes);
  std::vector<double> values;
  for (const auto& s : ensemble.samples) {
    const auto preds = forward(ensemble.config, s, inputs);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (selector == CdfSelector::TrueClass) {
        values.push_back(preds[i].log_probs[labels[i]]);
      } else {
        values.insert(values.end(), preds[i].log_probs.begin(), preds[i].log_probs.end());
      }
    }
  }
  if (values.empty()) throw ConfigError("logprob_cdf needs at least one prediction");
  std::sort(values.begin(), values.end());
  CdfTable t;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    t.values.push_back(values[i]);
    t.cdf.push_back(static_cast<double>(i + 1) / n);
  }
  return t;
}

}  // namespace dirclip
