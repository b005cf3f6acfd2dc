#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spiq/metrics.hpp"
#include "spiq/model_io.hpp"

namespace spiq {

/// FNV-1a 64 of the serialized model, as 16 hex digits.
std::string model_id(const Bytes& bytes);

struct Score {
  std::optional<double> top1;
  std::optional<ErrorStats> output_error;  // against reference logits
};

Score score_logits(const Tensor& logits, const std::optional<Tensor>& reference,
                   const std::optional<std::vector<std::int32_t>>& labels);

struct EvalReport {
  std::string model_id;
  std::string model_kind;
  std::optional<QuantConfig> config;
  std::size_t batch_size = 0;
  Score score;
};

std::string to_json(const EvalReport& r);

struct CompareCell {
  QuantMode mode = QuantMode::kStatic;
  int weight_bits = 8;
  int activation_bits = 8;
  double lambda = 0.0;
  Score score;
  std::optional<double> per_sample_seconds;
};

struct CompareRequest {
  std::vector<QuantMode> modes;
  int activation_bits_lo = 2;
  int activation_bits_hi = 8;
  int weight_bits = 8;
  Lambda lambda = Lambda::automatic();
  WeightGranularity granularity = WeightGranularity::kPerChannel;
  std::optional<std::uint64_t> seed;
  /// Per-sample time per cell; off by default because it breaks byte-identical reports.
  bool with_timing = false;
  std::size_t timing_repetitions = 5;
};

struct CompareReport {
  std::string model_id;
  std::string lambda;  // "auto" or the fixed value
  std::optional<std::uint64_t> seed;
  std::size_t batch_size = 0;
  std::string weight_granularity;
  std::optional<double> reference_top1;
  std::vector<CompareCell> cells;
};

/// Evaluates every (mode, activation bit-width) cell of the grid in one process.
CompareReport compare_grid(const ModelGraph& model, const Batch& batch,
                           const CompareRequest& req);

std::string to_json(const CompareReport& r);

}  // namespace spiq
