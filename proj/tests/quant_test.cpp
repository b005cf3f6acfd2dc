#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spiq/quant.hpp"

namespace spiq {
namespace {

using testing::random_tensor;

double q_at(double x, double s, int bits) {
  return quantize(Tensor({1}, {x}), QuantParams(bits, s)).q[0];
}

double frobenius_error(const Tensor& w, const QuantParams& p) {
  const Tensor back = dequantize(quantize(w, p));
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += (w[i] - back[i]) * (w[i] - back[i]);
  return std::sqrt(acc);
}

TEST(Levels, Values) {
  EXPECT_EQ(levels(8), 127);
  EXPECT_EQ(levels(2), 1);
  EXPECT_EQ(levels(4), 7);
  EXPECT_THROW(levels(1), ConfigError);
  EXPECT_THROW(levels(9), ConfigError);
}

TEST(Quantize, Examples) {
  EXPECT_EQ(q_at(1.0, 0.5, 8), 2);
  EXPECT_EQ(q_at(100.0, 0.5, 4), 7);
  EXPECT_EQ(q_at(-100.0, 0.5, 4), -7);
}

TEST(Quantize, TiesRoundToEven) {
  EXPECT_EQ(q_at(0.5, 1.0, 8), 0);
  EXPECT_EQ(q_at(1.5, 1.0, 8), 2);
  EXPECT_EQ(q_at(2.5, 1.0, 8), 2);
  EXPECT_EQ(q_at(-2.5, 1.0, 8), -2);
}

TEST(Quantize, RejectsBadScales) {
  EXPECT_THROW(QuantParams(8, 0.0), ConfigError);
  EXPECT_THROW(QuantParams(8, -1.0), ConfigError);
  EXPECT_THROW(QuantParams(8, std::nan("")), ConfigError);
  const PerChannelScale pc{{1.0, 1.0, 1.0}, ChannelRole::kOutput, 1};
  EXPECT_THROW(quantize(Tensor(Shape{2, 2}), QuantParams(8, pc)), DimensionError);
}

TEST(Dequantize, Examples) {
  const QuantizedTensor qt{IntTensor({2}, {2, 0}), QuantParams(8, 0.5)};
  EXPECT_EQ(dequantize(qt), Tensor({2}, {1.0, 0.0}));
}

TEST(Quantize, HalfScaleSweep) {
  std::mt19937_64 rng(3);
  for (int bits : {2, 4, 8}) {
    const double s = 0.037;
    const int beta = levels(bits);
    std::uniform_real_distribution<double> d(-s * beta, s * beta);
    Tensor x(Shape{100000});
    for (auto& v : x.values()) v = d(rng);
    const QuantizedTensor qt = quantize(x, QuantParams(bits, s));
    const Tensor back = dequantize(qt);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_LE(std::abs(x[i] - back[i]), s / 2) << "bits=" << bits << " x=" << x[i];
      ASSERT_LE(std::abs(qt.q[i]), beta);
    }
  }
}

TEST(Quantize, SaturatesAndIsMonotone) {
  Tensor x(Shape{2001});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -50.0 + 0.05 * static_cast<double>(i);
  const auto qt = quantize(x, QuantParams(3, 0.7));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LE(std::abs(qt.q[i]), 3);
    if (i > 0) EXPECT_LE(qt.q[i - 1], qt.q[i]);
  }
}

TEST(Quantize, PerChannelAlongAxis) {
  // Columns are output channels of an FC weight.
  const Tensor w({2, 2}, {1, 8, 2, 4});
  const PerChannelScale s = weight_scale_per_channel(w, 8);
  EXPECT_EQ(s.axis, 1u);
  const auto qt = quantize(w, QuantParams(8, s));
  EXPECT_EQ(qt.q, IntTensor({2, 2}, {64, 127, 127, 64}));
}

TEST(WeightScale, PerLayerExamples) {
  EXPECT_DOUBLE_EQ(weight_scale_per_layer(Tensor({2, 2}, {1, -2, 0.5, 4}), 8), 4.0 / 127);
  const Tensor zeros(Shape{3, 3});
  const double s = weight_scale_per_layer(zeros, 8);
  EXPECT_EQ(s, kScaleFloor);
  const QuantizedTensor qt = quantize(zeros, QuantParams(8, s));
  for (auto q : qt.q.values()) EXPECT_EQ(q, 0);
}

TEST(WeightScale, PerLayerRoundTrip) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Tensor w = random_tensor({17, 9}, rng, -3.0, 3.0);
    const double s = weight_scale_per_layer(w, 6);
    const Tensor back = dequantize(quantize(w, QuantParams(6, s)));
    for (std::size_t i = 0; i < w.size(); ++i) ASSERT_LE(std::abs(w[i] - back[i]), s / 2);
  }
}

TEST(WeightScale, PerChannelExamples) {
  const PerChannelScale s = weight_scale_per_channel(Tensor({2, 2}, {1, 8, 2, 4}), 8);
  ASSERT_EQ(s.values.size(), 2u);
  EXPECT_DOUBLE_EQ(s.values[0], 2.0 / 127);
  EXPECT_DOUBLE_EQ(s.values[1], 8.0 / 127);
  EXPECT_EQ(s.role, ChannelRole::kOutput);

  const Tensor single({3, 1}, {0.5, -1.5, 1.0});
  EXPECT_EQ(weight_scale_per_channel(single, 8).values[0], weight_scale_per_layer(single, 8));
}

TEST(WeightScale, ConvChannelsOnAxisZero) {
  std::mt19937_64 rng(8);
  const Tensor w = random_tensor({4, 3, 3, 3}, rng);
  const PerChannelScale s = weight_scale_per_channel(w, 8);
  EXPECT_EQ(s.axis, 0u);
  ASSERT_EQ(s.values.size(), 4u);
}

TEST(WeightScale, PerChannelAttainsBeta) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 100; ++t) {
    const int bits = 2 + t % 7;
    const Tensor w = random_tensor({11, 7}, rng, -2.0, 2.0);
    const auto qt = quantize(w, QuantParams(bits, weight_scale_per_channel(w, bits)));
    for (std::size_t c = 0; c < 7; ++c) {
      int m = 0;
      for (std::size_t r = 0; r < 11; ++r) m = std::max(m, std::abs(qt.q.at(r, c)));
      ASSERT_EQ(m, levels(bits));
    }
  }
}

// Per-channel scales are never coarser than the per-layer scale, so the
// worst-case element error bound is dominated for every matrix. The realized
// Frobenius error is not: with near-equal column magnitudes the two grids
// differ by a few percent and rounding luck decides (see the pinned case
// below), so that comparison is checked in aggregate.
TEST(WeightScale, PerChannelDominatesPerLayer) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 32);
  std::uniform_real_distribution<double> spread(0.01, 10.0);
  int dominated = 0;
  double sum_layer = 0.0, sum_channel = 0.0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const int bits = 2 + t % 7;
    Tensor w = random_tensor({static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng))},
                             rng);
    // Give columns different magnitudes.
    for (std::size_t c = 0; c < w.dim(1); ++c) {
      const double k = spread(rng);
      for (std::size_t r = 0; r < w.dim(0); ++r) w.at(r, c) *= k;
    }
    const double layer_scale = weight_scale_per_layer(w, bits);
    const PerChannelScale channel_scale = weight_scale_per_channel(w, bits);
    const Tensor back = dequantize(quantize(w, QuantParams(bits, channel_scale)));
    for (std::size_t r = 0; r < w.dim(0); ++r)
      for (std::size_t c = 0; c < w.dim(1); ++c) {
        ASSERT_LE(channel_scale.values[c], layer_scale);
        ASSERT_LE(std::abs(w.at(r, c) - back.at(r, c)), channel_scale.values[c] / 2);
      }
    const double per_layer = frobenius_error(w, QuantParams(bits, layer_scale));
    const double per_channel = frobenius_error(w, QuantParams(bits, channel_scale));
    sum_layer += per_layer;
    sum_channel += per_channel;
    if (per_channel <= per_layer + 1e-12) ++dominated;
  }
  EXPECT_LT(sum_channel, sum_layer);
  EXPECT_GE(dominated, trials * 95 / 100) << dominated << " of " << trials;
}

TEST(WeightScale, PerChannelCanLoseOnOneMatrix) {
  // Column 1 is slightly smaller than column 0; its finer grid rounds 0.73 worse.
  const Tensor w({2, 2}, {-0.97, 0.73, 0.96, 0.91});
  const double per_layer = frobenius_error(w, QuantParams(3, weight_scale_per_layer(w, 3)));
  const double per_channel = frobenius_error(w, QuantParams(3, weight_scale_per_channel(w, 3)));
  EXPECT_GT(per_channel, per_layer);
}

TEST(WeightChannelAxis, Roles) {
  EXPECT_EQ(weight_channel_axis({4, 5}, ChannelRole::kOutput), 1u);
  EXPECT_EQ(weight_channel_axis({4, 5}, ChannelRole::kInput), 0u);
  EXPECT_EQ(weight_channel_axis({4, 5, 3, 3}, ChannelRole::kOutput), 0u);
  EXPECT_EQ(weight_channel_axis({4, 5, 3, 3}, ChannelRole::kInput), 1u);
  EXPECT_THROW(weight_channel_axis({4}, ChannelRole::kInput), DimensionError);
}

}  // namespace
}  // namespace spiq
