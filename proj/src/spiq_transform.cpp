#include "spiq/spiq_transform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace spiq {

Tensor fold_input_scales(const Tensor& weights, std::span<const double> scales) {
  const std::size_t axis = weight_channel_axis(weights.shape(), ChannelRole::kInput);
  const std::size_t channels = weights.dim(axis);
  if (scales.size() != channels)
    throw DimensionError("fold: " + std::to_string(scales.size()) + " input scales for " +
                         std::to_string(channels) + " input channels of weights " +
                         shape_str(weights.shape()));
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < weights.rank(); ++a) inner *= weights.dim(a);
  Tensor folded(weights.shape());
  for (std::size_t i = 0; i < weights.size(); ++i)
    folded[i] = weights[i] * scales[(i / inner) % channels];
  return folded;
}

FoldedLayer build_spiq_layer(const Tensor& weights, std::optional<std::vector<double>> bias,
                             const std::optional<BatchNormStats>& bn, const SpiqConfig& cfg) {
  if (!bn)
    throw ConfigError("spiq quantization needs batch-norm statistics preceding the layer");
  const std::size_t in_axis = weight_channel_axis(weights.shape(), ChannelRole::kInput);
  if (bn->channels() != weights.dim(in_axis))
    throw DimensionError("batch-norm stats cover " + std::to_string(bn->channels()) +
                         " channels, weights " + shape_str(weights.shape()) + " expect " +
                         std::to_string(weights.dim(in_axis)));
  FoldedLayer layer{
      .q_weights = {IntTensor(weights.shape()), QuantParams(cfg.weight_bits, 1.0)},
      .input_scales = per_channel_input_scales(*bn, cfg.range),
      .output_scale = {},
      .bias = std::move(bias),
      .activation_bits = cfg.range.activation_bits,
  };
  const Tensor folded = fold_input_scales(weights, layer.input_scales.values);
  layer.output_scale = weight_scale_per_channel(folded, cfg.weight_bits);
  layer.q_weights = quantize(folded, QuantParams(cfg.weight_bits, layer.output_scale));
  return layer;
}

double spiq_neuron_contract(std::span<const double> input, const FoldedLayer& layer,
                            std::size_t n) {
  const IntTensor& q = layer.q_weights.q;
  if (q.rank() != 2) throw DimensionError("neuron contract is defined for FC layers");
  const std::size_t n_in = q.dim(0);
  if (input.size() != n_in || n >= q.dim(1))
    throw DimensionError("neuron contract: input/neuron index out of range");
  const double beta = static_cast<double>((1 << (layer.activation_bits - 1)) - 1);
  std::int64_t acc = 0;
  for (std::size_t m = 0; m < n_in; ++m) {
    const double r = std::clamp(std::nearbyint(input[m] / layer.input_scales.values[m]), -beta, beta);
    acc += static_cast<std::int64_t>(r) * q.at(m, n);
  }
  double out = layer.output_scale.values[n] * static_cast<double>(acc);
  if (layer.bias) out += (*layer.bias)[n];
  return out;
}

}  // namespace spiq
