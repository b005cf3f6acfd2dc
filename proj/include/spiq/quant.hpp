#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "spiq/tensor.hpp"

namespace spiq {

/// Scales never go below this floor; zero-range tensors would otherwise divide by zero.
inline constexpr double kScaleFloor = 1e-12;

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 8;

/// Largest representable magnitude 2^(b-1) - 1 of a signed b-bit symmetric quantizer.
int levels(int bits);

/// Which logical channel a per-channel scale vector runs along.
enum class ChannelRole { kInput, kOutput };

const char* to_string(ChannelRole role);

/// Tensor axis of the given channel role for a weight tensor ([n_in, n_out] or
/// [Cout, Cin, k, k]).
std::size_t weight_channel_axis(const Shape& weight_shape, ChannelRole role);

/// Activations are [N, C] or [N, C, H, W]; channels are always axis 1.
inline constexpr std::size_t kActivationChannelAxis = 1;

struct PerChannelScale {
  std::vector<double> values;
  ChannelRole role = ChannelRole::kOutput;
  std::size_t axis = 0;  // tensor dimension the values index

  bool operator==(const PerChannelScale&) const = default;
};

using Scale = std::variant<double, PerChannelScale>;

/// Bit-width plus a scalar or per-channel scale.
class QuantParams {
 public:
  QuantParams(int bits, Scale scale);

  int bits() const noexcept { return bits_; }
  int beta() const noexcept { return beta_; }
  const Scale& scale() const noexcept { return scale_; }
  bool per_channel() const noexcept { return std::holds_alternative<PerChannelScale>(scale_); }

  bool operator==(const QuantParams&) const = default;

 private:
  int bits_;
  int beta_;
  Scale scale_;
};

struct QuantizedTensor {
  IntTensor q;
  QuantParams params;
};

/// Q(x) = clamp(round_half_even(x / s), -beta, beta).
inline std::int32_t quantize_value(double x, double scale, int beta) {
  const double r = std::nearbyint(x / scale);
  const double b = static_cast<double>(beta);
  return static_cast<std::int32_t>(r > b ? b : (r < -b ? -b : r));
}

QuantizedTensor quantize(const Tensor& x, const QuantParams& params);
Tensor dequantize(const QuantizedTensor& qt);

/// max |w| over the tensor, divided by beta (floored).
double weight_scale_per_layer(const Tensor& weights, int bits);

/// One scale per output channel: FC columns, conv leading axis.
PerChannelScale weight_scale_per_channel(const Tensor& weights, int bits);

/// max |w| for each output channel (unfloored).
std::vector<double> output_channel_max_abs(const Tensor& weights);

/// max |x| over all elements.
double max_abs(std::span<const double> values);

}  // namespace spiq
