#include "spiq/report.hpp"

#include <cstdio>

#include "json.hpp"

namespace spiq {

using json = nlohmann::json;

std::string model_id(const Bytes& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Score score_logits(const Tensor& logits, const std::optional<Tensor>& reference,
                   const std::optional<std::vector<std::int32_t>>& labels) {
  Score s;
  if (labels) s.top1 = top1(logits, *labels);
  if (reference) s.output_error = summarize(row_errors(logits, *reference, ErrorNorm::kL2));
  return s;
}

namespace {

json score_json(const Score& s) {
  json j;
  j["top1"] = s.top1 ? json(*s.top1) : json(nullptr);
  if (s.output_error) {
    j["mean_error"] = s.output_error->mean;
    j["max_error"] = s.output_error->max;
  } else {
    j["mean_error"] = nullptr;
    j["max_error"] = nullptr;
  }
  return j;
}

json config_json(const QuantConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"weight_bits", c.weight_bits},
          {"activation_bits", c.activation_bits},
          {"lambda", c.lambda.resolve(c.activation_bits)},
          {"weight_granularity", to_string(c.granularity)}};
}

}  // namespace

std::string to_json(const EvalReport& r) {
  json j = {{"model_id", r.model_id},
            {"model_kind", r.model_kind},
            {"batch_size", r.batch_size},
            {"config", r.config ? config_json(*r.config) : json(nullptr)}};
  j.update(score_json(r.score));
  return j.dump(2) + "\n";
}

CompareReport compare_grid(const ModelGraph& model, const Batch& batch,
                           const CompareRequest& req) {
  if (req.modes.empty()) throw ConfigError("compare grid has no modes");
  if (req.activation_bits_lo > req.activation_bits_hi)
    throw ConfigError("compare grid has an empty bit range");
  levels(req.activation_bits_lo);
  levels(req.activation_bits_hi);
  levels(req.weight_bits);

  CompareReport report;
  report.model_id = model_id(encode_model(model));
  report.lambda = req.lambda.is_auto() ? "auto" : format_double(req.lambda.resolve(8));
  report.seed = req.seed;
  report.batch_size = batch.inputs.dim(0);
  report.weight_granularity = to_string(req.granularity);
  const Tensor reference = forward_reference(model, batch.inputs);
  if (batch.labels) report.reference_top1 = top1(reference, *batch.labels);

  for (QuantMode mode : req.modes) {
    for (int a = req.activation_bits_lo; a <= req.activation_bits_hi; ++a) {
      const QuantConfig cfg{req.weight_bits, a, req.lambda, mode, req.granularity};
      const QuantizedModel q = quantize_model(model, cfg);
      CompareCell cell{mode, req.weight_bits, a, req.lambda.resolve(a),
                       score_logits(forward_quantized(q, batch.inputs), reference, batch.labels),
                       std::nullopt};
      if (req.with_timing)
        cell.per_sample_seconds =
            time_modes(model, {cfg}, batch.inputs, req.timing_repetitions).front().median();
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string to_json(const CompareReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json j = {{"mode", to_string(c.mode)},
              {"weight_bits", c.weight_bits},
              {"activation_bits", c.activation_bits},
              {"lambda", c.lambda}};
    j.update(score_json(c.score));
    j["per_sample_seconds"] = c.per_sample_seconds ? json(*c.per_sample_seconds) : json(nullptr);
    cells.push_back(std::move(j));
  }
  json j = {{"model_id", r.model_id},
            {"lambda", r.lambda},
            {"seed", r.seed ? json(*r.seed) : json(nullptr)},
            {"batch_size", r.batch_size},
            {"weight_granularity", r.weight_granularity},
            {"reference_top1", r.reference_top1 ? json(*r.reference_top1) : json(nullptr)},
            {"cells", cells}};
  return j.dump(2) + "\n";
}

}  // namespace spiq
