#include "spiq/range.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spiq {

void BatchNormStats::validate() const {
  if (mean.empty()) throw ConfigError("batch-norm stats have no channels");
  if (mean.size() != variance.size())
    throw ConfigError("batch-norm mean/variance length mismatch: " +
                      std::to_string(mean.size()) + " vs " + std::to_string(variance.size()));
  for (std::size_t c = 0; c < mean.size(); ++c) {
    if (!std::isfinite(mean[c]) || !std::isfinite(variance[c]) || variance[c] < 0.0)
      throw ConfigError("invalid batch-norm stats at channel " + std::to_string(c));
  }
}

Lambda Lambda::fixed(double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ConfigError("lambda must be a positive real, got " + std::to_string(value));
  Lambda l;
  l.value_ = value;
  return l;
}

double Lambda::resolve(int activation_bits) const {
  return value_ ? *value_ : lambda_default(activation_bits);
}

double lambda_default(int bits) {
  levels(bits);
  return static_cast<double>(bits);
}

std::vector<double> channel_ranges(const BatchNormStats& bn, double lambda) {
  bn.validate();
  std::vector<double> r(bn.channels());
  for (std::size_t c = 0; c < r.size(); ++c)
    r[c] = std::abs(bn.mean[c]) + lambda * std::sqrt(bn.variance[c]);
  return r;
}

double static_input_scale(const BatchNormStats& bn, const RangeConfig& cfg) {
  const int beta = levels(cfg.activation_bits);
  const auto r = channel_ranges(bn, cfg.lambda.resolve(cfg.activation_bits));
  return std::max(*std::max_element(r.begin(), r.end()) / beta, kScaleFloor);
}

PerChannelScale per_channel_input_scales(const BatchNormStats& bn, const RangeConfig& cfg) {
  const int beta = levels(cfg.activation_bits);
  PerChannelScale pc;
  pc.role = ChannelRole::kInput;
  pc.axis = kActivationChannelAxis;
  pc.values = channel_ranges(bn, cfg.lambda.resolve(cfg.activation_bits));
  for (double& v : pc.values) v = std::max(v / beta, kScaleFloor);
  return pc;
}

double dynamic_input_scale(std::span<const double> sample, int bits) {
  if (sample.empty()) throw DimensionError("dynamic scale of an empty tensor");
  return std::max(max_abs(sample) / levels(bits), kScaleFloor);
}

}  // namespace spiq
