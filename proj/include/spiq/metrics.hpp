#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "spiq/engine.hpp"

namespace spiq {

enum class ErrorNorm { kL2, kLinf };

ErrorNorm parse_norm(std::string_view s);

/// ||a - b|| over the flattened values.
double error_norm(std::span<const double> a, std::span<const double> b, ErrorNorm norm);

/// ||I - dequantize(quantize(I))||; per-channel params run along the activation axis.
double input_quant_error(const Tensor& input, const QuantParams& params,
                         ErrorNorm norm = ErrorNorm::kL2);

struct ErrorStats {
  double mean = 0.0;
  double max = 0.0;
  std::size_t count = 0;

  bool operator==(const ErrorStats&) const = default;
};

/// Aggregates one error value per sample.
ErrorStats summarize(std::span<const double> errors);

/// Per-row error between two [N, ...] tensors.
std::vector<double> row_errors(const Tensor& a, const Tensor& b, ErrorNorm norm);

inline constexpr std::size_t kMinOutputErrorSamples = 100;

/// Output error of one FC layer (bias-free) under every mode, for Gaussian
/// inputs with the BN moments. Weight granularity of static/dynamic comes
/// from `cfg`; its mode is ignored.
std::map<QuantMode, ErrorStats> layer_output_error(const Tensor& weights,
                                                   const BatchNormStats& bn,
                                                   const QuantConfig& cfg,
                                                   std::size_t sample_count, std::uint64_t seed,
                                                   ErrorNorm norm = ErrorNorm::kL2);

/// [count, channels] Gaussian draws with per-channel moments of `bn`.
Tensor gaussian_inputs(const BatchNormStats& bn, std::size_t count, std::uint64_t seed);

/// argmax per row; ties go to the lower index.
std::vector<std::int32_t> argmax_rows(const Tensor& logits);

/// Fraction of rows whose argmax equals the label.
double top1(const Tensor& logits, std::span<const std::int32_t> labels);

struct RangeRow {
  std::size_t layer = 0;
  QuantMode mode = QuantMode::kStatic;
  std::size_t index = 0;
  double range = 0.0;
};

/// Quantization ranges (scale * beta) at one layer: static gives one value,
/// dynamic one per sample of the full-precision layer input, spiq one per
/// input channel.
std::vector<RangeRow> range_histogram(const ModelGraph& model, const Tensor& batch,
                                      std::size_t layer_index,
                                      const std::vector<QuantMode>& modes,
                                      const RangeConfig& cfg);

/// Header: layer,mode,index,range
void write_ranges_csv(std::ostream& os, const std::vector<RangeRow>& rows);

struct SweepPoint {
  double lambda = 0.0;
  double top1 = 0.0;
};

/// Top-1 for each lambda with everything else in `cfg` fixed.
std::vector<SweepPoint> lambda_sweep(const ModelGraph& model, const Tensor& batch,
                                     std::span<const std::int32_t> labels,
                                     const std::vector<double>& lambda_grid,
                                     const QuantConfig& cfg);

/// Header: lambda,top1
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

}  // namespace spiq
