#include "spiq/quant.hpp"

#include <algorithm>
#include <string>

namespace spiq {

int levels(int bits) {
  if (bits < kMinBits || bits > kMaxBits)
    throw ConfigError("bit-width must be in [2, 8], got " + std::to_string(bits));
  return (1 << (bits - 1)) - 1;
}

const char* to_string(ChannelRole role) {
  return role == ChannelRole::kInput ? "input-channel" : "output-channel";
}

std::size_t weight_channel_axis(const Shape& weight_shape, ChannelRole role) {
  switch (weight_shape.size()) {
    case 2: return role == ChannelRole::kOutput ? 1 : 0;
    case 4: return role == ChannelRole::kOutput ? 0 : 1;
    default:
      throw DimensionError("weights must be rank 2 or 4, got " + shape_str(weight_shape));
  }
}

QuantParams::QuantParams(int bits, Scale scale)
    : bits_(bits), beta_(levels(bits)), scale_(std::move(scale)) {
  auto check = [](double s) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw ConfigError("quantization scale must be positive and finite, got " +
                        std::to_string(s));
  };
  if (const auto* pc = std::get_if<PerChannelScale>(&scale_)) {
    if (pc->values.empty()) throw ConfigError("per-channel scale vector is empty");
    std::for_each(pc->values.begin(), pc->values.end(), check);
  } else {
    check(std::get<double>(scale_));
  }
}

namespace {

struct AxisLayout {
  std::size_t channels;
  std::size_t inner;
};

AxisLayout axis_layout(const Shape& shape, const PerChannelScale& pc) {
  if (pc.axis >= shape.size())
    throw DimensionError("per-channel axis " + std::to_string(pc.axis) +
                         " out of range for shape " + shape_str(shape));
  if (shape[pc.axis] != pc.values.size())
    throw DimensionError("per-channel scale of length " + std::to_string(pc.values.size()) +
                         " does not match axis " + std::to_string(pc.axis) + " of shape " +
                         shape_str(shape));
  std::size_t inner = 1;
  for (std::size_t a = pc.axis + 1; a < shape.size(); ++a) inner *= shape[a];
  return {shape[pc.axis], inner};
}

}  // namespace

QuantizedTensor quantize(const Tensor& x, const QuantParams& params) {
  IntTensor q(x.shape());
  const int beta = params.beta();
  if (const auto* pc = std::get_if<PerChannelScale>(&params.scale())) {
    const auto [channels, inner] = axis_layout(x.shape(), *pc);
    for (std::size_t i = 0; i < x.size(); ++i)
      q[i] = quantize_value(x[i], pc->values[(i / inner) % channels], beta);
  } else {
    const double s = std::get<double>(params.scale());
    for (std::size_t i = 0; i < x.size(); ++i) q[i] = quantize_value(x[i], s, beta);
  }
  return {std::move(q), params};
}

Tensor dequantize(const QuantizedTensor& qt) {
  Tensor out(qt.q.shape());
  if (const auto* pc = std::get_if<PerChannelScale>(&qt.params.scale())) {
    const auto [channels, inner] = axis_layout(qt.q.shape(), *pc);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = pc->values[(i / inner) % channels] * qt.q[i];
  } else {
    const double s = std::get<double>(qt.params.scale());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * qt.q[i];
  }
  return out;
}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double weight_scale_per_layer(const Tensor& weights, int bits) {
  const int beta = levels(bits);
  return std::max(max_abs(weights.values()) / beta, kScaleFloor);
}

std::vector<double> output_channel_max_abs(const Tensor& weights) {
  const std::size_t axis = weight_channel_axis(weights.shape(), ChannelRole::kOutput);
  const std::size_t channels = weights.dim(axis);
  std::vector<double> m(channels, 0.0);
  if (axis == 0) {
    const std::size_t inner = weights.size() / channels;
    for (std::size_t i = 0; i < weights.size(); ++i)
      m[i / inner] = std::max(m[i / inner], std::abs(weights[i]));
  } else {
    for (std::size_t i = 0; i < weights.size(); ++i)
      m[i % channels] = std::max(m[i % channels], std::abs(weights[i]));
  }
  return m;
}

PerChannelScale weight_scale_per_channel(const Tensor& weights, int bits) {
  const int beta = levels(bits);
  PerChannelScale pc;
  pc.role = ChannelRole::kOutput;
  pc.axis = weight_channel_axis(weights.shape(), ChannelRole::kOutput);
  pc.values = output_channel_max_abs(weights);
  for (double& v : pc.values) v = std::max(v / beta, kScaleFloor);
  return pc;
}

}  // namespace spiq
