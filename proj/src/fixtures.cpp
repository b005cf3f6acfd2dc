#include "spiq/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "spiq/engine.hpp"
#include "spiq/metrics.hpp"

namespace spiq {
namespace {

constexpr std::size_t kCalibrationSamples = 2048;
// Evaluation samples whose top-2 reference logit margin falls below this
// quantile of a pilot draw are discarded.
constexpr double kMarginQuantile = 0.25;

double snap(double v) { return static_cast<double>(static_cast<float>(v)); }

struct Blueprint {
  Shape input_shape;
  std::vector<LayerSpec> layers;  // weights hold shapes only
};

LayerSpec fc(std::size_t in, std::size_t out, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::kFullyConnected;
  l.weights = Tensor({in, out});
  l.activation = act;
  return l;
}

LayerSpec conv(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride,
               std::size_t pad, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::kConv2d;
  l.weights = Tensor({cout, cin, k, k});
  l.conv = {stride, pad};
  l.activation = act;
  return l;
}

Blueprint blueprint(std::string_view name) {
  if (name == "mlp-3x64")
    return {{32},
            {fc(32, 64, Activation::kRelu), fc(64, 64, Activation::kRelu),
             fc(64, 64, Activation::kRelu), fc(64, 10, Activation::kNone)}};
  if (name == "cnn-2conv1fc") {
    LayerSpec flat;
    flat.kind = LayerKind::kFlatten;
    return {{3, 8, 8},
            {conv(3, 8, 3, 1, 1, Activation::kRelu), conv(8, 16, 3, 2, 1, Activation::kRelu),
             flat, fc(256, 10, Activation::kNone)}};
  }
  if (name == "fc-16x4") return {{16}, {fc(16, 4, Activation::kNone)}};
  throw ConfigError("unknown fixture template '" + std::string(name) + "'");
}

BatchNormStats draw_stats(std::size_t channels, bool uniform, std::mt19937_64& rng) {
  std::normal_distribution<double> mean_dist(0.0, 0.3);
  std::uniform_real_distribution<double> log_std(std::log(0.5), std::log(2.0));
  BatchNormStats s{std::vector<double>(channels), std::vector<double>(channels)};
  for (std::size_t c = 0; c < channels; ++c) {
    if (uniform && c > 0) {
      s.mean[c] = s.mean[0];
      s.variance[c] = s.variance[0];
      continue;
    }
    s.mean[c] = snap(mean_dist(rng));
    const double sd = std::exp(log_std(rng));
    s.variance[c] = snap(sd * sd);
  }
  return s;
}

Tensor draw_inputs(const Shape& per_sample, std::size_t n, const BatchNormStats& stats,
                   std::mt19937_64& rng) {
  Tensor x(batched(n, per_sample));
  const auto l = detail::channel_layout(x.shape());
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < l.outer * l.channels; ++r) {
    const std::size_t c = r % l.channels;
    const double sd = std::sqrt(stats.variance[c]);
    for (std::size_t i = 0; i < l.inner; ++i)
      x[r * l.inner + i] = snap(stats.mean[c] + sd * unit(rng));
  }
  return x;
}

/// Per-channel mean and (population) variance over batch and spatial positions.
std::pair<std::vector<double>, std::vector<double>> channel_moments(const Tensor& x) {
  const auto l = detail::channel_layout(x.shape());
  std::vector<double> mean(l.channels, 0.0), var(l.channels, 0.0);
  const double count = static_cast<double>(l.outer * l.inner);
  for (std::size_t r = 0; r < l.outer * l.channels; ++r)
    for (std::size_t i = 0; i < l.inner; ++i) mean[r % l.channels] += x[r * l.inner + i];
  for (double& m : mean) m /= count;
  for (std::size_t r = 0; r < l.outer * l.channels; ++r)
    for (std::size_t i = 0; i < l.inner; ++i) {
      const double d = x[r * l.inner + i] - mean[r % l.channels];
      var[r % l.channels] += d * d;
    }
  for (double& v : var) v /= count;
  return {std::move(mean), std::move(var)};
}

std::vector<double> top2_margins(const Tensor& logits) {
  std::vector<double> m(logits.dim(0));
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    double best = -std::numeric_limits<double>::infinity(), second = best;
    for (std::size_t j = 0; j < logits.dim(1); ++j) {
      const double v = logits.at(i, j);
      if (v > best) {
        second = best;
        best = v;
      } else if (v > second) {
        second = v;
      }
    }
    m[i] = best - second;
  }
  return m;
}

/// Per-channel affine so the sample moments equal `stats` exactly.
void restandardize(Tensor& x, const BatchNormStats& stats) {
  const auto [mean, var] = channel_moments(x);
  const auto l = detail::channel_layout(x.shape());
  for (std::size_t r = 0; r < l.outer * l.channels; ++r) {
    const std::size_t c = r % l.channels;
    const double k = var[c] > 0.0 ? std::sqrt(stats.variance[c] / var[c]) : 0.0;
    for (std::size_t i = 0; i < l.inner; ++i) {
      double& v = x[r * l.inner + i];
      v = snap(stats.mean[c] + (v - mean[c]) * k);
    }
  }
}

/// Gaussian evaluation batch restricted to samples the model separates with
/// a non-trivial margin, then re-standardized to the declared moments.
Tensor draw_evaluation_batch(const ModelGraph& model, const BatchNormStats& stats,
                             std::size_t n, std::mt19937_64& rng) {
  const std::size_t chunk = std::max<std::size_t>(n, 256);
  std::vector<double> pilot = top2_margins(
      forward_reference(model, draw_inputs(model.input_shape, chunk, stats, rng)));
  std::sort(pilot.begin(), pilot.end());
  const double threshold = pilot[static_cast<std::size_t>(kMarginQuantile * (pilot.size() - 1))];

  const std::size_t row = element_count(model.input_shape);
  std::vector<double> kept;
  kept.reserve(n * row);
  while (kept.size() < n * row) {
    const Tensor cand = draw_inputs(model.input_shape, chunk, stats, rng);
    const auto margins = top2_margins(forward_reference(model, cand));
    for (std::size_t i = 0; i < chunk && kept.size() < n * row; ++i)
      if (margins[i] >= threshold)
        kept.insert(kept.end(), cand.data() + i * row, cand.data() + (i + 1) * row);
  }
  Tensor x(batched(n, model.input_shape), std::move(kept));
  restandardize(x, stats);
  return x;
}

}  // namespace

std::vector<std::string> fixture_templates() { return {"mlp-3x64", "cnn-2conv1fc", "fc-16x4"}; }

Fixture generate_fixture(std::string_view name, std::uint64_t seed, const FixtureOptions& options) {
  if (options.batch_size == 0) throw ConfigError("fixture batch size must be positive");
  Blueprint bp = blueprint(name);
  std::mt19937_64 rng(seed);
  std::mt19937_64 calib_rng(seed ^ 0x9e3779b97f4a7c15ULL);

  ModelGraph model{bp.input_shape, {}};
  std::optional<BatchNormStats> first_stats;
  Tensor calib;
  for (auto& layer : bp.layers) {
    if (layer.kind == LayerKind::kFlatten) {
      model.layers.push_back(layer);
      calib = calib.reshaped({calib.dim(0), calib.size() / calib.dim(0)});
      continue;
    }
    const std::size_t in_ch = layer.input_channels();
    BatchNorm bn;
    bn.stats = draw_stats(in_ch, options.uniform_bn_stats, rng);
    if (!first_stats) {
      first_stats = bn.stats;
      bn.input_mean = bn.stats.mean;
      bn.input_variance = bn.stats.variance;
      calib = draw_inputs(bp.input_shape, kCalibrationSamples, bn.stats, calib_rng);
    } else {
      auto [m, v] = channel_moments(calib);
      for (double& x : m) x = snap(x);
      for (double& x : v) x = snap(x);
      bn.input_mean = std::move(m);
      bn.input_variance = std::move(v);
    }
    layer.pre_bn = std::move(bn);

    const double he = std::sqrt(2.0 / static_cast<double>(layer.fan_in()));
    std::normal_distribution<double> wdist(0.0, he);
    for (auto& w : layer.weights.values()) w = snap(wdist(rng));
    std::normal_distribution<double> bdist(0.0, 0.1);
    std::vector<double> bias(layer.output_channels());
    for (auto& b : bias) b = snap(bdist(rng));
    layer.bias = std::move(bias);

    model.layers.push_back(layer);
    ModelGraph one{Shape(calib.shape().begin() + 1, calib.shape().end()), {layer}};
    calib = forward_reference(one, calib);
  }
  model.validate();

  Fixture f{std::move(model), {}};
  f.batch.inputs = draw_evaluation_batch(f.model, *first_stats, options.batch_size, rng);
  f.batch.labels = argmax_rows(forward_reference(f.model, f.batch.inputs));
  return f;
}

}  // namespace spiq
