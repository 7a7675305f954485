#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dirclip/error.hpp"
#include "dirclip/log_density.hpp"
#include "gradient_check.hpp"

using namespace dirclip;
using namespace dirclip::support;

class GradientOracle : public ::testing::TestWithParam<Family> {};

TEST_P(GradientOracle, MatchesCentralDifferences) {
  const Family& fam = GetParam();
  const GradientCheck r = check_gradients(fam, 100, 2024);
  ASSERT_EQ(r.instances, 100) << "could not draw kink-free instances";
  EXPECT_LE(r.worst_ratio, 1.0);
  EXPECT_LT(r.worst_value_error, 1e-12);
  if (fam.spec.prediction_prior && fam.spec.prediction_prior->family == PriorFamily::DirClip &&
      fam.spec.prediction_prior->clip > -5.0) {
    EXPECT_TRUE(r.clipped_seen) << "clipped branch never exercised";
  }
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, GradientOracle, ::testing::ValuesIn(families()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(LogDensity, NormalPriorModeHasZeroGradient) {
  NetworkConfig c{2, {4, 4}, 3, Activation::ReLU};
  PosteriorSpec s;
  s.likelihood.kind = LikelihoodKind::None;
  const auto dg = grad_log_density(c, ParamVector(c), Matrix(3, 2, 0.5), std::vector<std::size_t>{0, 1, 2}, s);
  for (double g : dg.gradient.values()) EXPECT_EQ(g, 0.0);
}

TEST(LogDensity, MinibatchEstimateIsUnbiased) {
  NetworkConfig c{2, {5}, 3, Activation::ReLU};
  Rng rng(77);
  const ParamVector p = init_params(c, rng);
  const Matrix x = support::random_inputs(rng, 6, 2);
  const std::vector<std::size_t> y{0, 1, 2, 2, 1, 0};
  PosteriorSpec s;
  s.prediction_prior = PriorSpec::dirclip(0.5, -10.0);
  const auto full = grad_log_density(c, p, x, y, s);
  std::vector<double> mean(p.size(), 0.0);
  double mean_value = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::vector<std::size_t> batch{i};
    const auto mb = grad_log_density_minibatch(c, p, x, y, s, batch);
    for (std::size_t j = 0; j < p.size(); ++j) mean[j] += mb.gradient[j] / 6.0;
    mean_value += mb.log_density / 6.0;
  }
  EXPECT_NEAR(mean_value, full.log_density, 1e-10);
  for (std::size_t j = 0; j < p.size(); ++j) EXPECT_NEAR(mean[j], full.gradient[j], 1e-10);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  const auto whole = grad_log_density_minibatch(c, p, x, y, s, all);
  for (std::size_t j = 0; j < p.size(); ++j) EXPECT_NEAR(whole.gradient[j], full.gradient[j], 1e-12);
}

TEST(LogDensity, NonFiniteTermRaises) {
  NetworkConfig c{1, {}, 2, Activation::ReLU};
  ParamVector p(c, {1e200, -1e200, 0.0, 0.0});
  PosteriorSpec s;
  s.prediction_prior = PriorSpec::dirichlet(0.5);
  Matrix x(1, 1, 1e300);
  EXPECT_THROW(grad_log_density(c, p, x, std::vector<std::size_t>{0}, s), NumericalError);
}
