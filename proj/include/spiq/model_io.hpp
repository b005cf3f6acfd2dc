#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spiq/engine.hpp"
#include "spiq/model.hpp"

namespace spiq {

// SPIQMDL1 container:
//   8 bytes   magic "SPIQMDL1"
//   4 bytes   little-endian u32 manifest length
//   manifest  UTF-8 JSON (layout, shapes, scales, blob offsets/lengths)
//   blobs     concatenated raw arrays (f32 / f64 / i32, little-endian, row-major)
// Offsets in blob descriptors are relative to the first blob byte.
// See docs/format.md for the manifest schema.

inline constexpr char kMagic[] = "SPIQMDL1";
inline constexpr int kFormatVersion = 1;

enum class ContainerKind { kModel, kQuantizedModel, kBatch, kTensor };

const char* to_string(ContainerKind kind);

struct Batch {
  Tensor inputs;
  std::optional<std::vector<std::int32_t>> labels;

  bool operator==(const Batch&) const = default;
};

using Bytes = std::string;

Bytes encode_model(const ModelGraph& model);
ModelGraph decode_model(const Bytes& bytes);

Bytes encode_quantized_model(const QuantizedModel& model);
QuantizedModel decode_quantized_model(const Bytes& bytes);

Bytes encode_batch(const Batch& batch);
Batch decode_batch(const Bytes& bytes);

/// Stored as f64 so logits and feature maps survive exactly.
Bytes encode_tensor(const Tensor& t, const std::string& name);
Tensor decode_tensor(const Bytes& bytes);

/// Kind recorded in the manifest; validates the header only.
ContainerKind container_kind(const Bytes& bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

inline void save_model(const ModelGraph& m, const std::filesystem::path& p) {
  write_file(p, encode_model(m));
}
inline ModelGraph load_model(const std::filesystem::path& p) { return decode_model(read_file(p)); }
inline void save_quantized_model(const QuantizedModel& m, const std::filesystem::path& p) {
  write_file(p, encode_quantized_model(m));
}
inline QuantizedModel load_quantized_model(const std::filesystem::path& p) {
  return decode_quantized_model(read_file(p));
}
inline void save_batch(const Batch& b, const std::filesystem::path& p) {
  write_file(p, encode_batch(b));
}
inline Batch load_batch(const std::filesystem::path& p) { return decode_batch(read_file(p)); }

/// Decimal form of a double that parses back to the same bits.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace spiq
