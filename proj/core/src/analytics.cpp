#include "dirclip/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dirclip/error.hpp"

namespace dirclip {

namespace {

constexpr std::uint64_t kFlowInitStream = 11;
constexpr double kLogitClamp = 40.0;

void require(bool ok, const char* message) {
  if (!ok) throw ConfigError(message);
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

// log Gamma(shape) draw; for shape < 1 uses G(a) = G(a + 1) * U^(1/a) so that
// tiny shapes do not underflow.
double log_gamma_draw(Rng& rng, double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng));
  }
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  return std::log(gamma(rng)) + std::log(rng.uniform()) / shape;
}

}  // namespace

SimplexPoint::SimplexPoint(std::vector<double> probs) : probs_(std::move(probs)) {
  require(!probs_.empty(), "simplex point must be non-empty");
  double total = 0.0;
  for (double p : probs_) {
    require(std::isfinite(p) && p >= 0.0, "simplex point has a negative or non-finite entry");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-12, "simplex point does not sum to 1");
}

double SimplexPoint::sum_sq() const {
  double s = 0.0;
  for (double p : probs_) s += p * p;
  return s;
}

double GradientField::sum() const { return std::accumulate(g.begin(), g.end(), 0.0); }

GradientField dirichlet_prior_gradient(std::size_t num_classes, double alpha) {
  return {std::vector<double>(num_classes, alpha - 1.0)};
}

GradientField categorical_gradient(std::size_t num_classes, std::size_t label) {
  require(label < num_classes, "label out of range");
  GradientField f{std::vector<double>(num_classes, 0.0)};
  f.g[label] = 1.0;
  return f;
}

GradientField dirichlet_posterior_gradient(std::size_t num_classes, double alpha,
                                           std::size_t label) {
  GradientField f = dirichlet_prior_gradient(num_classes, alpha);
  require(label < num_classes, "label out of range");
  f.g[label] += 1.0;
  return f;
}

double true_class_update(const SimplexPoint& point, const GradientField& field,
                         std::size_t label) {
  if (field.g.size() != point.size()) {
    throw DimensionError("gradient field", point.size(), field.g.size());
  }
  require(label < point.size(), "label out of range");
  const double g_plus = field.sum();
  double y_dot_g = 0.0;
  for (std::size_t k = 0; k < point.size(); ++k) y_dot_g += point[k] * field.g[k];
  return field.g[label] - g_plus * point[label] - y_dot_g + g_plus * point.sum_sq();
}

double critical_alpha(std::size_t num_classes) {
  require(num_classes >= 2, "critical_alpha needs K >= 2");
  const double k = static_cast<double>(num_classes);
  return (k - 2.0) / k;
}

SimplexPoint one_wrong_class_point(std::size_t num_classes, double p_wrong, std::size_t label,
                                   std::size_t wrong) {
  require(num_classes >= 2, "need K >= 2");
  require(label < num_classes && wrong < num_classes && label != wrong,
          "wrong class must differ from the label");
  require(p_wrong >= 0.0 && p_wrong <= 1.0, "p_wrong must lie in [0, 1]");
  const double rest = (1.0 - p_wrong) / static_cast<double>(num_classes - 1);
  std::vector<double> probs(num_classes, rest);
  probs[wrong] = p_wrong;
  // Fold rounding into the wrong class so the point sums to 1.
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  probs[wrong] += 1.0 - total;
  return SimplexPoint(std::move(probs));
}

double PhaseDiagram::boundary_alpha() const {
  const std::size_t np = wrong_probs.size();
  std::size_t first = alphas.size();
  for (std::size_t i = alphas.size(); i-- > 0;) {
    bool all_positive = true;
    for (std::size_t j = 0; j < np; ++j) all_positive = all_positive && at(i, j) > 0.0;
    if (!all_positive) break;
    first = i;
  }
  return first == alphas.size() ? std::nan("") : alphas[first];
}

PhaseDiagram phase_diagram(std::size_t num_classes, std::span<const double> alphas,
                           std::span<const double> wrong_probs) {
  require(num_classes >= 2, "phase diagram needs K >= 2");
  require(!alphas.empty() && !wrong_probs.empty(), "phase diagram grids must be non-empty");
  require(std::is_sorted(alphas.begin(), alphas.end()), "alpha grid must be ascending");
  for (double a : alphas) require(a > 0.0, "alpha grid must be positive");
  for (double p : wrong_probs) require(p > 0.0 && p < 1.0, "wrong-class grid must lie in (0, 1)");

  PhaseDiagram out;
  out.num_classes = num_classes;
  out.alphas.assign(alphas.begin(), alphas.end());
  out.wrong_probs.assign(wrong_probs.begin(), wrong_probs.end());
  out.values.reserve(alphas.size() * wrong_probs.size());
  for (double a : alphas) {
    const GradientField g = dirichlet_posterior_gradient(num_classes, a, 0);
    for (double p : wrong_probs) {
      out.values.push_back(true_class_update(one_wrong_class_point(num_classes, p, 0, 1), g, 0));
    }
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t n) {
  std::vector<double> v = linspace(lo_exp, hi_exp, n);
  for (double& x : v) x = std::pow(10.0, x);
  return v;
}

FlowResult simplex_flow(const FlowOptions& o) {
  require(o.num_classes >= 2, "flow needs K >= 2");
  require(o.label < o.num_classes, "flow label out of range");
  require(o.n_particles >= 1, "flow needs at least one particle");
  require(o.step_size > 0.0 && std::isfinite(o.step_size), "flow step size must be positive");
  require(o.record_every >= 1, "record_every must be >= 1");
  require(o.alpha > 0.0, "flow alpha must be positive");

  const std::size_t K = o.num_classes;
  GradientField field;
  switch (o.density) {
    case FlowDensity::Prior: field = dirichlet_prior_gradient(K, o.alpha); break;
    case FlowDensity::Likelihood: field = categorical_gradient(K, o.label); break;
    case FlowDensity::Posterior: field = dirichlet_posterior_gradient(K, o.alpha, o.label); break;
  }
  const double g_plus = field.sum();

  FlowResult out;
  out.trajectories.resize(o.n_particles);
  out.corner_fraction.assign(K, 0.0);
  std::vector<double> z(K), logp(K), probs(K);

  for (std::size_t n = 0; n < o.n_particles; ++n) {
    // Dirichlet(1, ..., 1) via normalised exponentials; logits are log(E_k).
    Rng rng = Rng::keyed(o.seed, kFlowInitStream, n);
    for (auto& zk : z) zk = std::log(-std::log(rng.uniform()));
    auto& traj = out.trajectories[n];

    for (std::size_t step = 0; step <= o.n_steps; ++step) {
      const double lse = log_sum_exp(z);
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        logp[k] = z[k] - lse;
        probs[k] = std::exp(logp[k]);
        total += probs[k];
      }
      out.max_simplex_error = std::max(out.max_simplex_error, std::abs(total - 1.0));
      if (step % o.record_every == 0 || step == o.n_steps) traj.push_back(probs);
      if (step == o.n_steps) break;

      // Logit-space ascent: dz = eps * J^T g with J = I - 1 y_hat^T.
      double mean = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        z[k] += o.step_size * (field.g[k] - g_plus * probs[k]);
        mean += z[k];
      }
      mean /= static_cast<double>(K);
      bool clamped = false;
      for (auto& zk : z) {
        zk -= mean;
        if (std::abs(zk) > kLogitClamp) {
          zk = std::copysign(kLogitClamp, zk);
          clamped = true;
        }
      }
      if (clamped) ++out.clamp_events;
    }
    const auto& last = traj.back();
    const auto corner = static_cast<std::size_t>(
        std::distance(last.begin(), std::max_element(last.begin(), last.end())));
    out.corner_fraction[corner] += 1.0;
  }
  for (auto& c : out.corner_fraction) c /= static_cast<double>(o.n_particles);
  out.wrong_corner_fraction = 1.0 - out.corner_fraction[o.label];
  return out;
}

double dirichlet_posterior_low_true_mass(std::size_t num_classes, double alpha, std::size_t label,
                                         std::size_t n_samples, std::uint64_t seed) {
  require(num_classes >= 2 && label < num_classes, "invalid class count or label");
  require(alpha > 0.0, "alpha must be positive");
  require(n_samples >= 1, "need at least one sample");
  // Target Dir(alpha + 1[k = y]); proposal has shape 1 on the true class, so
  // the density ratio is y_hat_y^alpha <= 1.
  Rng rng(seed);
  std::vector<double> lg(num_classes);
  std::size_t accepted = 0;
  std::size_t low = 0;
  while (accepted < n_samples) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      lg[k] = log_gamma_draw(rng, k == label ? 1.0 : alpha);
    }
    const double log_y = lg[label] - log_sum_exp(lg);
    if (std::log(rng.uniform()) <= alpha * log_y) {
      ++accepted;
      if (log_y < std::log(0.5)) ++low;
    }
  }
  return static_cast<double>(low) / static_cast<double>(n_samples);
}

ConfidenceBounds confidence_bounds(std::span<const double> log_probs, std::size_t label,
                                   double temperature) {
  require(label < log_probs.size(), "label out of range");
  require(temperature > 0.0, "temperature must be positive");
  const double log_y = log_probs[label];
  double rest = 0.0;
  for (std::size_t k = 0; k < log_probs.size(); ++k) {
    if (k != label) rest += std::exp(log_probs[k]);
  }
  const double inv_t = 1.0 / temperature;
  ConfidenceBounds b;
  b.lower = inv_t * log_y;
  b.product = confidence_logpdf(log_probs, temperature) + log_y;
  b.upper = (inv_t - 1.0) * std::max(log_y, std::log(rest)) + log_y;
  return b;
}

double cold_likelihood_density(double z, double temperature) {
  return std::pow(z, 1.0 / temperature);
}

double upper_bound_density(double z, double temperature) {
  return std::pow(std::max(z, 1.0 - z), 1.0 / temperature - 1.0) * z;
}

double cdf_cold(double z, double temperature) {
  require(temperature > 0.0, "temperature must be positive");
  z = std::clamp(z, 0.0, 1.0);
  return std::pow(z, 1.0 + 1.0 / temperature);
}

double cdf_upper_bound(double z, double temperature) {
  require(temperature > 0.0, "temperature must be positive");
  const double t = temperature;
  z = std::clamp(z, 0.0, 1.0);
  // q = 2^(-1/T); the normaliser (1 - q)(T + 1) stays O(1) for small T.
  const double q = std::exp(-std::log(2.0) / t);
  const double one_minus_q = -std::expm1(-std::log(2.0) / t);
  if (z <= 0.5) {
    return (t - std::pow(1.0 - z, 1.0 / t) * (t + z)) / (one_minus_q * (t + 1.0));
  }
  const double at_half = (2.0 * t - q / one_minus_q) / (2.0 * (t + 1.0));
  return at_half + (2.0 * std::pow(z, 1.0 + 1.0 / t) - q) / (2.0 * one_minus_q * (t + 1.0));
}

double wasserstein_cold_vs_upper(double temperature, std::size_t nodes) {
  require(nodes >= 2, "quadrature needs at least two nodes");
  const double h = 1.0 / static_cast<double>(nodes - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double z = static_cast<double>(i) * h;
    const double d = std::abs(cdf_cold(z, temperature) - cdf_upper_bound(z, temperature));
    total += (i == 0 || i + 1 == nodes) ? 0.5 * d : d;
  }
  return total * h;
}

std::vector<double> wasserstein_curve(std::span<const double> temperatures, std::size_t nodes) {
  std::vector<double> out;
  out.reserve(temperatures.size());
  for (double t : temperatures) out.push_back(wasserstein_cold_vs_upper(t, nodes));
  return out;
}

RejectionSample rejection_sample_unit(const std::function<double(double)>& density, double bound,
                                      std::size_t n_samples, std::uint64_t seed) {
  require(bound > 0.0 && std::isfinite(bound), "rejection bound must be positive");
  RejectionSample out;
  out.samples.reserve(n_samples);
  Rng rng(seed);
  while (out.samples.size() < n_samples) {
    const double x = rng.uniform();
    const double u = rng.uniform();
    ++out.proposals;
    const double d = density(x);
    if (d > bound * (1.0 + 1e-12)) throw NumericalError("rejection sampler", "density exceeds bound");
    if (u * bound <= d) out.samples.push_back(x);
  }
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<SlicePoint> divergence_slice(const NetworkConfig& config, const ParamVector& params,
                                         const Matrix& inputs, std::span<const std::size_t> labels,
                                         std::size_t bias_index, std::span<const double> thetas,
                                         const PriorSpec& prior) {
  check_shapes(config, params, inputs);
  prior.validate();
  if (labels.size() != inputs.rows()) throw DimensionError("labels", inputs.rows(), labels.size());
  require(bias_index < config.num_classes, "bias index must select an output-layer bias");

  const std::size_t last = params.layout().size() - 1;
  ParamVector p = params;
  std::vector<SlicePoint> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    p.biases(last)[bias_index] = theta;
    const auto preds = forward(config, p, inputs);
    double prior_total = 0.0;
    double lik_total = 0.0;
    if (prior.applies_to() == AppliesTo::Parameters) {
      prior_total = param_prior_logpdf(prior, p.values());
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (prior.applies_to() == AppliesTo::Predictions) {
        prior_total += prediction_prior_logpdf(prior, preds[i].log_probs);
      }
      lik_total += preds[i].log_probs[labels[i]];
    }
    out.push_back({theta, prior_total, prior_total + lik_total});
  }
  return out;
}

double dirclip_total_bound(std::size_t n_examples, std::size_t num_classes, double alpha,
                           double clip) {
  require(clip < 0.0, "clip value must be negative");
  // Each clipped term (alpha - 1) max(l, v) is at most (alpha - 1) v when
  // alpha < 1 and at most 0 otherwise.
  return static_cast<double>(n_examples * num_classes) * std::max(0.0, (alpha - 1.0) * clip);
}

}  // namespace dirclip
