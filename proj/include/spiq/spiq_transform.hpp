#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spiq/quant.hpp"
#include "spiq/range.hpp"

namespace spiq {

/// A layer whose per-channel input scales are folded into its weights.
///
/// Inputs are quantized channel-wise with `input_scales`; the integer product
/// with `q_weights` is dequantized by `output_scale` alone, since the input
/// scales are already absorbed into the weights.
struct FoldedLayer {
  QuantizedTensor q_weights;
  PerChannelScale input_scales;   // one per input channel, activation axis
  PerChannelScale output_scale;   // one per output channel, weight axis
  std::optional<std::vector<double>> bias;
  int activation_bits = 8;
};

struct SpiqConfig {
  RangeConfig range;
  int weight_bits = 8;
};

/// Multiplies input-channel slice m of the weights by scales[m]
/// (diag(s) * W for an [n_in, n_out] matrix, the Cin axis for a conv kernel).
Tensor fold_input_scales(const Tensor& weights, std::span<const double> scales);

FoldedLayer build_spiq_layer(const Tensor& weights, std::optional<std::vector<double>> bias,
                             const std::optional<BatchNormStats>& bn, const SpiqConfig& cfg);

/// Output of neuron n of a folded FC layer for one input sample, evaluated
/// term by term: sum_m output_scale[n] * round(I_m / s_m) * q[m, n] (+ bias).
/// The per-term scale is common to all terms and is applied once after the
/// exact integer sum.
double spiq_neuron_contract(std::span<const double> input, const FoldedLayer& layer,
                            std::size_t n);

}  // namespace spiq
