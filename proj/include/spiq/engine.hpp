#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "spiq/model.hpp"
#include "spiq/spiq_transform.hpp"

namespace spiq {

/// Quantized weights of a static or dynamic layer.
struct WeightPayload {
  QuantizedTensor q_weights;
  /// max |w| per output channel, or a single entry for per-layer weights.
  std::vector<double> weight_max;
};

struct StaticPayload {
  WeightPayload weights;
  double input_scale = 0.0;
  /// (input_scale * weight_max[n]) / beta_w, the dequantization factor.
  std::vector<double> output_multiplier;
};

struct DynamicPayload {
  WeightPayload weights;
};

using LayerPayload = std::variant<std::monostate, StaticPayload, DynamicPayload, FoldedLayer>;

struct QuantizedLayer {
  LayerKind kind = LayerKind::kFullyConnected;
  Shape weight_shape;
  Conv2dParams conv;
  Activation activation = Activation::kNone;
  std::optional<BatchNorm> pre_bn;
  std::optional<std::vector<double>> bias;
  LayerPayload payload;
};

struct QuantizedModel {
  QuantConfig config;
  Shape input_shape;
  std::vector<QuantizedLayer> layers;

  QuantMode mode() const noexcept { return config.mode; }
  /// Throws InvariantError when a payload does not match the mode.
  void validate() const;
};

/// Static multiplier (input_scale * weight_max[n]) / beta_w for every output channel.
std::vector<double> static_output_multiplier(double input_scale,
                                             const std::vector<double>& weight_max,
                                             std::size_t out_channels, int weight_bits);

/// Quantizes every weighted layer. Static and spiq modes require BN stats
/// before each weighted layer (ConfigError otherwise).
QuantizedModel quantize_model(const ModelGraph& model, const QuantConfig& cfg);

/// Full-precision pass. `stop_after`, when given, returns the output of that layer.
Tensor forward_reference(const ModelGraph& model, const Tensor& batch,
                         std::optional<std::size_t> stop_after = std::nullopt);

/// Simulated-integer pass: each layer quantizes its (post-BN) input, runs the
/// integer kernel with 64-bit accumulation and dequantizes before bias and
/// activation.
Tensor forward_quantized(const QuantizedModel& qmodel, const Tensor& batch,
                         std::optional<std::size_t> stop_after = std::nullopt);

/// Full-precision tensor entering layer `index`'s quantizer (after its BN).
Tensor reference_layer_input(const ModelGraph& model, const Tensor& batch, std::size_t index);

struct InferenceTiming {
  QuantMode mode = QuantMode::kStatic;
  std::size_t batch_size = 0;
  /// Seconds per sample for every timed repetition.
  std::vector<double> per_sample_seconds;

  double median() const;
};

/// Samples per timed slice in time_modes.
inline constexpr std::size_t kTimingSlice = 8;

/// Times each configuration single-threaded, in thread CPU time. One warm-up pass per config is
/// discarded. Every repetition covers the whole batch for each config, run as
/// slices of kTimingSlice samples interleaved across configs.
std::vector<InferenceTiming> time_modes(const ModelGraph& model,
                                        const std::vector<QuantConfig>& configs,
                                        const Tensor& batch, std::size_t repetitions);

/// Sets the OpenMP thread count to one for its lifetime.
class SerialScope {
 public:
  SerialScope();
  ~SerialScope();
  SerialScope(const SerialScope&) = delete;
  SerialScope& operator=(const SerialScope&) = delete;

 private:
  int saved_threads_;
};

}  // namespace spiq
