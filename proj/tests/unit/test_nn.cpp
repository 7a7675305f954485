#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dirclip/error.hpp"
#include "dirclip/nn.hpp"
#include "support.hpp"

using namespace dirclip;

TEST(NetworkConfig, ParamCountFromLayout) {
  NetworkConfig c{2, {10, 10, 10, 10, 10}, 2, Activation::ReLU};
  EXPECT_EQ(c.param_count(), 492u);
  NetworkConfig d{3, {}, 4, Activation::ReLU};
  EXPECT_EQ(d.param_count(), 16u);
  const auto layout = c.layout();
  ASSERT_EQ(layout.size(), 6u);
  EXPECT_EQ(layout[0].weight_offset, 0u);
  EXPECT_EQ(layout[0].bias_offset, 20u);
  EXPECT_EQ(layout[1].weight_offset, 30u);
}

TEST(NetworkConfig, RejectsBadShapes) {
  EXPECT_THROW((NetworkConfig{2, {}, 1, Activation::ReLU}.validate()), ConfigError);
  EXPECT_THROW((NetworkConfig{2, {4, 0}, 2, Activation::ReLU}.validate()), ConfigError);
  EXPECT_THROW((NetworkConfig{0, {4}, 2, Activation::ReLU}.validate()), ConfigError);
}

TEST(ParamVector, SizeMismatchNamesBothSizes) {
  NetworkConfig c{2, {3}, 2, Activation::ReLU};
  try {
    ParamVector p(c, std::vector<double>(5));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.expected(), 17u);
    EXPECT_EQ(e.actual(), 5u);
  }
}

TEST(Forward, ZeroParamsGiveUniform) {
  NetworkConfig c{2, {5, 5}, 4, Activation::ReLU};
  ParamVector p(c);
  Rng rng(3);
  const auto preds = forward(c, p, support::random_inputs(rng, 7, 2));
  ASSERT_EQ(preds.size(), 7u);
  for (const auto& pr : preds) {
    for (double lp : pr.log_probs) EXPECT_NEAR(lp, std::log(0.25), 1e-15);
  }
}

TEST(Forward, TwoClassLogSoftmax) {
  const auto lp = log_softmax(std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(lp[0], -0.31326168751822286, 1e-15);
  EXPECT_NEAR(lp[1], -1.3132616875182228, 1e-15);
}

TEST(Forward, LogSoftmaxStableForHugeLogits) {
  const auto lp = log_softmax(std::vector<double>{1000.0, 0.0, -1000.0});
  EXPECT_DOUBLE_EQ(lp[0], 0.0);
  EXPECT_DOUBLE_EQ(lp[1], -1000.0);
  EXPECT_DOUBLE_EQ(lp[2], -2000.0);
}

TEST(Forward, HandComputedSingleHiddenLayer) {
  // 2 -> 2 -> 2 with identity hidden weights, bias (0, -1), output swaps units.
  NetworkConfig c{2, {2}, 2, Activation::ReLU};
  ParamVector p(c);
  auto w0 = p.weights(0);
  w0[0] = 1.0; w0[1] = 0.0; w0[2] = 0.0; w0[3] = 1.0;
  p.biases(0)[1] = -1.0;
  auto w1 = p.weights(1);
  w1[0] = 0.0; w1[1] = 2.0; w1[2] = 1.0; w1[3] = 0.0;
  p.biases(1)[0] = 0.5;
  const std::vector<double> x{3.0, 0.5};
  // hidden = relu(3, -0.5) = (3, 0); logits = (2*0 + 0.5, 1*3) = (0.5, 3)
  const auto pr = forward_one(c, p, x);
  EXPECT_DOUBLE_EQ(pr.logits[0], 0.5);
  EXPECT_DOUBLE_EQ(pr.logits[1], 3.0);
  const double lse = std::log(std::exp(0.5) + std::exp(3.0));
  EXPECT_NEAR(pr.log_probs[0], 0.5 - lse, 1e-15);
  EXPECT_NEAR(pr.log_probs[1], 3.0 - lse, 1e-15);
  EXPECT_EQ(pr.argmax(), 1u);
}

TEST(Forward, InputDimensionMismatch) {
  NetworkConfig c{2, {3}, 2, Activation::ReLU};
  ParamVector p(c);
  EXPECT_THROW(forward(c, p, Matrix(4, 3)), DimensionError);
  NetworkConfig other{2, {4}, 2, Activation::ReLU};
  EXPECT_THROW(forward(other, p, Matrix(4, 2)), DimensionError);
}

TEST(ForwardProperty, RowsAreDistributionsAndDeterministic) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    NetworkConfig c{2, {1 + rng() % 8, 1 + rng() % 8}, 2 + rng() % 5, Activation::ReLU};
    ParamVector p(c);
    const double scale = 5.0 * rng.uniform();
    for (auto& v : p.values()) v = scale * rng.normal();
    const Matrix x = support::random_inputs(rng, 5, 2);
    const auto a = forward(c, p, x);
    const auto b = forward(c, p, x);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto probs = a[i].probs();
      EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-9);
      for (double lp : a[i].log_probs) EXPECT_LE(lp, 0.0);
      EXPECT_EQ(a[i].log_probs, b[i].log_probs);
    }
  }
}

TEST(Init, WeightScaleFollowsFanIn) {
  NetworkConfig c{50, {200}, 2, Activation::ReLU};
  Rng rng(5);
  const ParamVector p = init_params(c, rng);
  const auto w = p.weights(0);
  double ss = 0.0;
  for (double v : w) ss += v * v;
  EXPECT_NEAR(ss / static_cast<double>(w.size()), 1.0 / 50.0, 0.1 / 50.0);
  for (double b : p.biases(0)) EXPECT_EQ(b, 0.0);
  Rng again(5);
  EXPECT_EQ(init_params(c, again), p);
}

TEST(Rng, KeyedStreamsAreReproducibleAndDistinct) {
  Rng a = Rng::keyed(1, 2, 3), b = Rng::keyed(1, 2, 3), c = Rng::keyed(1, 2, 4);
  const auto x = a(), y = b(), z = c();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  Rng u(0);
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}
