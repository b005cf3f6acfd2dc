#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spiq/quant.hpp"

namespace spiq {

/// Per-channel moments of a layer input, read off the preceding batch norm.
struct BatchNormStats {
  std::vector<double> mean;
  std::vector<double> variance;

  std::size_t channels() const noexcept { return mean.size(); }
  /// Throws ConfigError on length mismatch, negative or non-finite entries.
  void validate() const;

  bool operator==(const BatchNormStats&) const = default;
};

/// Number of standard deviations covered by an estimated range. Auto resolves
/// to the activation bit-width.
class Lambda {
 public:
  static Lambda automatic() { return Lambda(); }
  static Lambda fixed(double value);

  bool is_auto() const noexcept { return !value_.has_value(); }
  double resolve(int activation_bits) const;

  bool operator==(const Lambda&) const = default;

 private:
  Lambda() = default;
  std::optional<double> value_;
};

/// Value recommended for static ranges by the DFQ line of work.
inline constexpr double kDfqLambda = 6.0;

struct RangeConfig {
  Lambda lambda = Lambda::automatic();
  int activation_bits = 8;
};

/// lambda = b.
double lambda_default(int bits);

/// |mean| + lambda * sqrt(variance) for each channel.
std::vector<double> channel_ranges(const BatchNormStats& bn, double lambda);

double static_input_scale(const BatchNormStats& bn, const RangeConfig& cfg);

/// One scale per input channel, tagged for activation axis 1.
PerChannelScale per_channel_input_scales(const BatchNormStats& bn, const RangeConfig& cfg);

/// max |i| / beta of a single sample, recomputed at every inference.
double dynamic_input_scale(std::span<const double> sample, int bits);

}  // namespace spiq
