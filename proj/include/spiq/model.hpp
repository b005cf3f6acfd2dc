#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spiq/kernels.hpp"
#include "spiq/range.hpp"

namespace spiq {

enum class LayerKind { kFullyConnected, kConv2d, kFlatten };
enum class Activation { kNone, kRelu };

const char* to_string(LayerKind kind);
const char* to_string(Activation act);

/// Batch norm preceding a layer, kept as an explicit full-precision affine.
///
/// `stats` are the moments of the normalized output (the layer input) and
/// drive range estimation. `input_mean` / `input_variance` are the running
/// moments of the tensor entering the batch norm. The affine is
///   y = (x - input_mean) / sqrt(input_variance + eps) * sqrt(variance) + mean
/// so a tensor with the running moments leaves with the declared moments.
struct BatchNorm {
  static constexpr double kEpsilon = 1e-5;

  BatchNormStats stats;
  std::vector<double> input_mean;
  std::vector<double> input_variance;

  std::size_t channels() const noexcept { return stats.channels(); }
  void validate() const;
  /// Per-channel (scale, shift) of the affine.
  std::pair<std::vector<double>, std::vector<double>> affine() const;

  bool operator==(const BatchNorm&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kFullyConnected;
  Tensor weights;  // [n_in, n_out] or [Cout, Cin, k, k]; empty for flatten
  std::optional<std::vector<double>> bias;
  Conv2dParams conv;
  std::optional<BatchNorm> pre_bn;
  Activation activation = Activation::kNone;

  std::size_t input_channels() const;
  std::size_t output_channels() const;
  /// Products summed per output element.
  std::size_t fan_in() const;
  bool has_weights() const noexcept { return kind != LayerKind::kFlatten; }

  bool operator==(const LayerSpec&) const = default;
};

/// Per-sample output shape of one layer given its per-sample input shape.
Shape layer_output_shape(LayerKind kind, const Shape& weight_shape, const Conv2dParams& conv,
                         const Shape& in);

/// Integer accumulators stay far below 2^63 with 127^2 * fan-in when
/// fan-in is capped here.
inline constexpr std::size_t kMaxFanIn = std::size_t{1} << 20;

struct ModelGraph {
  Shape input_shape;  // per-sample extents: {features} or {C, H, W}
  std::vector<LayerSpec> layers;

  /// Per-sample shape after each layer; throws DimensionError when layers
  /// do not compose and ConfigError on invalid BN or fan-in.
  std::vector<Shape> validate() const;
  Shape output_shape() const { return validate().back(); }

  bool operator==(const ModelGraph&) const = default;
};

/// Prepends the batch extent.
Shape batched(std::size_t n, const Shape& per_sample);

enum class QuantMode { kStatic, kDynamic, kSpiq };
enum class WeightGranularity { kPerLayer, kPerChannel };

const char* to_string(QuantMode mode);
const char* to_string(WeightGranularity g);
QuantMode parse_mode(std::string_view s);
WeightGranularity parse_granularity(std::string_view s);

struct QuantConfig {
  int weight_bits = 8;
  int activation_bits = 8;
  Lambda lambda = Lambda::automatic();
  QuantMode mode = QuantMode::kSpiq;
  WeightGranularity granularity = WeightGranularity::kPerChannel;

  void validate() const;
  RangeConfig range() const { return {lambda, activation_bits}; }
  bool operator==(const QuantConfig&) const = default;
};

}  // namespace spiq
