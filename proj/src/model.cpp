#include "spiq/model.hpp"

#include <cmath>

namespace spiq {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kFullyConnected: return "fully-connected";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kFlatten: return "flatten";
  }
  return "?";
}

const char* to_string(Activation act) { return act == Activation::kRelu ? "relu" : "none"; }

const char* to_string(QuantMode mode) {
  switch (mode) {
    case QuantMode::kStatic: return "static";
    case QuantMode::kDynamic: return "dynamic";
    case QuantMode::kSpiq: return "spiq";
  }
  return "?";
}

const char* to_string(WeightGranularity g) {
  return g == WeightGranularity::kPerLayer ? "per-layer" : "per-channel";
}

QuantMode parse_mode(std::string_view s) {
  if (s == "static") return QuantMode::kStatic;
  if (s == "dynamic") return QuantMode::kDynamic;
  if (s == "spiq") return QuantMode::kSpiq;
  throw ConfigError("unknown quantization mode '" + std::string(s) + "'");
}

WeightGranularity parse_granularity(std::string_view s) {
  if (s == "per-layer") return WeightGranularity::kPerLayer;
  if (s == "per-channel") return WeightGranularity::kPerChannel;
  throw ConfigError("unknown weight granularity '" + std::string(s) + "'");
}

void QuantConfig::validate() const {
  levels(weight_bits);
  levels(activation_bits);
}

void BatchNorm::validate() const {
  stats.validate();
  if (input_mean.size() != channels() || input_variance.size() != channels())
    throw ConfigError("batch-norm running moments do not match its channel count");
  for (std::size_t c = 0; c < channels(); ++c)
    if (!std::isfinite(input_mean[c]) || !(input_variance[c] >= 0.0))
      throw ConfigError("invalid batch-norm running moments at channel " + std::to_string(c));
}

std::pair<std::vector<double>, std::vector<double>> BatchNorm::affine() const {
  std::vector<double> scale(channels()), shift(channels());
  for (std::size_t c = 0; c < channels(); ++c) {
    scale[c] = std::sqrt(stats.variance[c]) / std::sqrt(input_variance[c] + kEpsilon);
    shift[c] = stats.mean[c] - input_mean[c] * scale[c];
  }
  return {std::move(scale), std::move(shift)};
}

std::size_t LayerSpec::input_channels() const {
  switch (kind) {
    case LayerKind::kFullyConnected: return weights.dim(0);
    case LayerKind::kConv2d: return weights.dim(1);
    case LayerKind::kFlatten: break;
  }
  throw DimensionError("flatten has no fixed channel count");
}

std::size_t LayerSpec::output_channels() const {
  switch (kind) {
    case LayerKind::kFullyConnected: return weights.dim(1);
    case LayerKind::kConv2d: return weights.dim(0);
    case LayerKind::kFlatten: break;
  }
  throw DimensionError("flatten has no fixed channel count");
}

std::size_t LayerSpec::fan_in() const {
  switch (kind) {
    case LayerKind::kFullyConnected: return weights.dim(0);
    case LayerKind::kConv2d: return weights.dim(1) * weights.dim(2) * weights.dim(3);
    case LayerKind::kFlatten: return 0;
  }
  return 0;
}

Shape layer_output_shape(LayerKind kind, const Shape& weight_shape, const Conv2dParams& conv,
                         const Shape& in) {
  if (kind == LayerKind::kFlatten) return Shape{element_count(in)};
  const std::size_t want_rank = kind == LayerKind::kConv2d ? 4 : 2;
  if (weight_shape.size() != want_rank)
    throw DimensionError("weights have shape " + shape_str(weight_shape));
  if (kind == LayerKind::kConv2d) {
    if (in.size() != 3 || in[0] != weight_shape[1])
      throw DimensionError("input " + shape_str(in) + " does not match kernel " +
                           shape_str(weight_shape));
    if (weight_shape[2] != weight_shape[3]) throw DimensionError("kernel must be square");
    const std::size_t k = weight_shape[2];
    return Shape{weight_shape[0], conv_output_extent(in[1], k, conv),
                 conv_output_extent(in[2], k, conv)};
  }
  if (in.size() != 1 || in[0] != weight_shape[0])
    throw DimensionError("input " + shape_str(in) + " does not match weights " +
                         shape_str(weight_shape));
  return Shape{weight_shape[1]};
}

Shape batched(std::size_t n, const Shape& per_sample) {
  Shape s{n};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

std::vector<Shape> ModelGraph::validate() const {
  if (input_shape.size() != 1 && input_shape.size() != 3)
    throw DimensionError("model input must be {features} or {C, H, W}, got " +
                         shape_str(input_shape));
  if (layers.empty()) throw DimensionError("model has no layers");
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& layer = layers[l];
    const std::string where = "layer " + std::to_string(l) + " (" + to_string(layer.kind) + ")";
    if (layer.kind == LayerKind::kFlatten) {
      if (layer.pre_bn || layer.bias) throw ConfigError(where + ": flatten carries no parameters");
      cur = Shape{element_count(cur)};
      shapes.push_back(cur);
      continue;
    }
    try {
      cur = layer_output_shape(layer.kind, layer.weights.shape(), layer.conv, cur);
    } catch (const DimensionError& e) {
      throw DimensionError(where + ": " + e.what());
    }
    if (layer.bias && layer.bias->size() != layer.output_channels())
      throw DimensionError(where + ": bias length does not match output channels");
    if (layer.pre_bn) {
      layer.pre_bn->validate();
      if (layer.pre_bn->channels() != layer.input_channels())
        throw ConfigError(where + ": batch-norm channel count does not match input channels");
    }
    if (layer.fan_in() > kMaxFanIn)
      throw ConfigError(where + ": fan-in " + std::to_string(layer.fan_in()) +
                        " exceeds the accumulator-safe cap");
    shapes.push_back(cur);
  }
  return shapes;
}

}  // namespace spiq
