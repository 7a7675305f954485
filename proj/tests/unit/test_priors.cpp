#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dirclip/error.hpp"
#include "dirclip/priors.hpp"
#include "support.hpp"

using namespace dirclip;

namespace {

std::vector<double> logs(std::initializer_list<double> p) {
  std::vector<double> out;
  for (double v : p) out.push_back(std::log(v));
  return out;
}

}  // namespace

TEST(Dirichlet, AlphaOneIsFlat) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(dirichlet_logpdf(support::random_log_probs(rng, 5), 1.0), 0.0);
  }
}

TEST(Dirichlet, TwoClassUniformPoint) {
  EXPECT_NEAR(dirichlet_logpdf(logs({0.5, 0.5}), 0.5), std::log(2.0), 1e-12);
}

TEST(Dirichlet, DivergesTowardsCorner) {
  double previous = -INFINITY;
  for (double e = 1e-2; e > 1e-300; e *= 1e-10) {
    const std::vector<double> lp{std::log1p(-e), std::log(e)};
    const double v = dirichlet_logpdf(lp, 0.5);
    EXPECT_GT(v, previous);
    previous = v;
  }
  EXPECT_GT(previous, 300.0);
}

TEST(DirClip, AlphaOneIsFlat) {
  Rng rng(2);
  for (double v : {-1.0, -10.0, -50.0}) {
    EXPECT_EQ(dirclip_logpdf(support::random_log_probs(rng, 3, 40.0), 1.0, v), 0.0);
  }
}

TEST(DirClip, ClippedBranch) {
  const std::vector<double> lp{std::log1p(-std::exp(-20.0)), -20.0};
  // -0.5 * (log(1 - e^-20) + max(-20, -10))
  EXPECT_NEAR(dirclip_logpdf(lp, 0.5, -10.0), 5.0, 1e-8);
}

TEST(DirClip, MatchesDirichletWhenUnclipped) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto lp = support::random_log_probs(rng, 4, 3.0);
    if (*std::min_element(lp.begin(), lp.end()) <= -10.0) continue;
    EXPECT_DOUBLE_EQ(dirclip_logpdf(lp, 0.3, -10.0), dirichlet_logpdf(lp, 0.3));
  }
}

TEST(DirClipProperty, BoundedOverRandomSimplexPoints) {
  Rng rng(4);
  for (double alpha : {0.01, 0.5, 0.9}) {
    for (double v : {-5.0, -50.0}) {
      for (std::size_t k : {2u, 10u}) {
        const double bound = static_cast<double>(k) * std::abs(v) * std::abs(alpha - 1.0) + std::abs(v);
        double sup = -INFINITY;
        for (int i = 0; i < 100000; ++i) {
          sup = std::max(sup, dirclip_logpdf(support::random_log_probs(rng, k, 200.0), alpha, v));
        }
        EXPECT_LE(sup, bound) << "alpha " << alpha << " v " << v << " K " << k;
      }
    }
  }
}

TEST(Ndg, AlphaTildeConstruction) {
  const NdgParams p = NdgParams::make(10, 0.1, 3);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_DOUBLE_EQ(p.alpha_tilde[k], k == 3 ? 1.1 : 0.1);
    EXPECT_DOUBLE_EQ(p.sigma[k], std::log(1.0 / p.alpha_tilde[k] + 1.0));
  }
}

TEST(Ndg, TrueClassMeanIsZero) {
  for (double alpha : {0.001, 0.1, 0.5, 1.0, 3.0}) {
    for (std::size_t k : {2u, 3u, 10u, 100u}) {
      for (std::size_t y : {std::size_t{0}, k - 1}) {
        EXPECT_EQ(NdgParams::make(k, alpha, y).mu[y], 0.0);
      }
    }
  }
}

TEST(Ndg, ConfidentCorrectIsNearTheMode) {
  for (double alpha : {0.01, 0.1}) {
    double best = -INFINITY, best_p = 0.0;
    for (int i = 1; i < 100000; ++i) {
      const double p = i / 100000.0;
      const double v = ndg_logpdf(std::vector<double>{std::log(p), std::log1p(-p)}, alpha, 0);
      if (v > best) {
        best = v;
        best_p = p;
      }
    }
    EXPECT_GT(best_p, 0.95) << "alpha " << alpha;
  }
}

TEST(NdgFactorized, ReconstructsUpToAConstant) {
  Rng rng(5);
  for (double alpha : {0.01, 0.3, 1.0}) {
    for (std::size_t k : {2u, 10u}) {
      const std::size_t y = k / 2;
      double lo = INFINITY, hi = -INFINITY;
      for (int i = 0; i < 1000; ++i) {
        const auto lp = support::random_log_probs(rng, k, 10.0);
        const auto f = ndg_factorized(lp, alpha, y);
        const double d = f.prior_term + f.likelihood_term - ndg_logpdf(lp, alpha, y);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      EXPECT_LT(hi - lo, 1e-8) << "alpha " << alpha << " K " << k;
    }
  }
}

TEST(NdgFactorized, LikelihoodTermReadsOnlyTrueClass) {
  Rng rng(6);
  auto a = support::random_log_probs(rng, 5);
  auto b = support::random_log_probs(rng, 5);
  b[2] = a[2];
  EXPECT_EQ(ndg_factorized(a, 0.2, 2).likelihood_term, ndg_factorized(b, 0.2, 2).likelihood_term);
}

TEST(NdgFactorized, EqualScalesRemoveQuadraticTerm) {
  const auto c = NdgFactorCoefficients::from_moments(-2.0, 0.7, 0.0, 0.7);
  EXPECT_EQ(c.quadratic, 0.0);
  EXPECT_NE(c.linear, 0.0);
}

TEST(Confidence, TemperatureOneIsFlat) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(confidence_logpdf(support::random_log_probs(rng, 4), 1.0), 0.0);
}

TEST(Confidence, MatchesColdLikelihoodWhenArgmaxIsLabel) {
  const auto lp = logs({0.9, 0.06, 0.04});
  for (double t : {1.0, 0.5, 0.1}) {
    EXPECT_NEAR(confidence_logpdf(lp, t) + lp[0], std::log(0.9) / t, 1e-14);
  }
}

TEST(Confidence, TwoClassUniformPoint) {
  EXPECT_NEAR(confidence_logpdf(logs({0.5, 0.5}), 0.5), -std::log(2.0), 1e-12);
}

TEST(ConfidenceProperty, Sandwich) {
  Rng rng(8);
  for (double t : {1.0, 0.5, 0.1, 0.01}) {
    for (int i = 0; i < 10000; ++i) {
      const std::size_t k = 2 + rng() % 9;
      const std::size_t y = rng() % k;
      const auto lp = support::random_log_probs(rng, k, 8.0);
      const double product = confidence_logpdf(lp, t) + lp[y];
      const double lower = lp[y] / t;
      const double upper = (1.0 / t - 1.0) * std::log(std::max(std::exp(lp[y]), -std::expm1(lp[y]))) + lp[y];
      const double tol = 1e-9 * (1.0 + std::abs(lower));
      EXPECT_LE(lower, product + tol);
      EXPECT_LE(product, upper + tol);
      if (std::exp(lp[y]) > 0.5) EXPECT_NEAR(lower, product, tol);
    }
  }
}

TEST(Posterior, StandardBayesAtUnitTemperature) {
  NetworkConfig c{2, {3}, 2, Activation::ReLU};
  Rng rng(9);
  ParamVector p = init_params(c, rng);
  const Matrix x = support::random_inputs(rng, 6, 2);
  const std::vector<std::size_t> y{0, 1, 1, 0, 1, 0};
  const auto preds = forward(c, p, x);
  PosteriorSpec spec;
  spec.param_prior = PriorSpec::normal(2.0);
  double expected = 0.0;
  for (double v : p.values()) expected -= v * v / 8.0;
  for (std::size_t i = 0; i < preds.size(); ++i) expected += preds[i].log_probs[y[i]];
  EXPECT_NEAR(assemble_log_posterior(spec, preds, y, p), expected, 1e-12);
}

TEST(Posterior, TemperingNormalPriorRescalesVariance) {
  // (1/T) * N(theta; 0.1) == N(theta; 0.1 * sqrt(T)) up to a constant.
  NetworkConfig c{2, {3}, 2, Activation::ReLU};
  Rng rng(10);
  PosteriorSpec cold;
  cold.param_prior = PriorSpec::normal(0.1);
  cold.likelihood.kind = LikelihoodKind::None;
  cold.temperature = 0.25;
  PosteriorSpec eff = cold;
  eff.param_prior = PriorSpec::normal(0.05);
  eff.temperature = 1.0;
  double offset = NAN;
  for (int i = 0; i < 50; ++i) {
    ParamVector p = init_params(c, rng);
    const auto preds = forward(c, p, Matrix(0, 2));
    const double d = assemble_log_posterior(cold, preds, {}, p) - assemble_log_posterior(eff, preds, {}, p);
    if (std::isnan(offset)) offset = d;
    EXPECT_NEAR(d, offset, 1e-9);
  }
}

TEST(Posterior, NearUniformPredictionBeatsConfidentOneUnderSmallAlpha) {
  const auto confident = logs({0.99, 0.005, 0.005});
  const auto spread = logs({0.4999999, 0.4999999, 0.0000002});
  EXPECT_GT(dirclip_logpdf(spread, 0.01, -10.0), dirclip_logpdf(confident, 0.01, -10.0));
}

TEST(PosteriorSpec, WarnsOnImproperDirichlet) {
  PosteriorSpec s;
  s.prediction_prior = PriorSpec::dirichlet(0.5);
  const auto w = s.warnings();
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("improper_posterior"), std::string::npos);
  s.prediction_prior = PriorSpec::dirclip(0.5, -10.0);
  EXPECT_TRUE(s.warnings().empty());
}

TEST(PosteriorSpec, RejectsInvalidSpecs) {
  EXPECT_THROW(PriorSpec::dirclip(0.5, 1.0).validate(), ConfigError);
  EXPECT_THROW(PriorSpec::normal(-1.0).validate(), ConfigError);
  EXPECT_THROW(PriorSpec::confidence(0.0).validate(), ConfigError);
  PosteriorSpec s;
  s.temperature = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  PosteriorSpec t;
  t.prediction_prior = PriorSpec::normal(1.0);
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Observation, NonFiniteLogProbNamesTheTerm) {
  PosteriorSpec s;
  s.prediction_prior = PriorSpec::dirichlet(0.5);
  const std::vector<double> lp{0.0, -INFINITY};
  try {
    observation_logpdf(s, lp, 0);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_FALSE(e.term().empty());
  }
}
