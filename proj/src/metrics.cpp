#include "spiq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spiq/model_io.hpp"

namespace spiq {

ErrorNorm parse_norm(std::string_view s) {
  if (s == "l2") return ErrorNorm::kL2;
  if (s == "linf") return ErrorNorm::kLinf;
  throw ConfigError("unknown norm '" + std::string(s) + "' (expected l2 or linf)");
}

double error_norm(std::span<const double> a, std::span<const double> b, ErrorNorm norm) {
  if (a.size() != b.size()) throw DimensionError("error norm of tensors of different size");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    acc = norm == ErrorNorm::kL2 ? acc + d * d : std::max(acc, d);
  }
  return norm == ErrorNorm::kL2 ? std::sqrt(acc) : acc;
}

double input_quant_error(const Tensor& input, const QuantParams& params, ErrorNorm norm) {
  const Tensor back = dequantize(quantize(input, params));
  return error_norm(input.values(), back.values(), norm);
}

ErrorStats summarize(std::span<const double> errors) {
  if (errors.empty()) throw ConfigError("no errors to summarize");
  ErrorStats s;
  s.count = errors.size();
  for (double e : errors) {
    s.mean += e;
    s.max = std::max(s.max, e);
  }
  s.mean /= static_cast<double>(s.count);
  return s;
}

std::vector<double> row_errors(const Tensor& a, const Tensor& b, ErrorNorm norm) {
  if (a.shape() != b.shape())
    throw DimensionError("row errors: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t n = a.dim(0), row = a.size() / n;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i)
    e[i] = error_norm(a.values().subspan(i * row, row), b.values().subspan(i * row, row), norm);
  return e;
}

Tensor gaussian_inputs(const BatchNormStats& bn, std::size_t count, std::uint64_t seed) {
  bn.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Tensor x({count, bn.channels()});
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t c = 0; c < bn.channels(); ++c)
      x.at(i, c) = bn.mean[c] + std::sqrt(bn.variance[c]) * unit(rng);
  return x;
}

std::map<QuantMode, ErrorStats> layer_output_error(const Tensor& weights,
                                                   const BatchNormStats& bn,
                                                   const QuantConfig& cfg,
                                                   std::size_t sample_count, std::uint64_t seed,
                                                   ErrorNorm norm) {
  if (sample_count < kMinOutputErrorSamples)
    throw ConfigError("layer output error needs at least " +
                      std::to_string(kMinOutputErrorSamples) + " samples");
  if (weights.rank() != 2) throw DimensionError("layer output error expects FC weights");
  // BN running moments equal to the stats make the layer's own BN a no-op;
  // it is dropped after quantization so the draws feed the quantizer directly.
  ModelGraph graph{{weights.dim(0)}, {}};
  LayerSpec layer;
  layer.kind = LayerKind::kFullyConnected;
  layer.weights = weights;
  layer.pre_bn = BatchNorm{bn, bn.mean, bn.variance};
  graph.layers.push_back(std::move(layer));

  const Tensor inputs = gaussian_inputs(bn, sample_count, seed);
  const Tensor ref = kernels::matmul(inputs, weights);
  std::map<QuantMode, ErrorStats> out;
  for (QuantMode mode : {QuantMode::kStatic, QuantMode::kDynamic, QuantMode::kSpiq}) {
    QuantConfig c = cfg;
    c.mode = mode;
    QuantizedModel q = quantize_model(graph, c);
    q.layers[0].pre_bn.reset();
    out[mode] = summarize(row_errors(ref, forward_quantized(q, inputs), norm));
  }
  return out;
}

std::vector<std::int32_t> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax expects [N, classes] logits");
  std::vector<std::int32_t> idx(logits.dim(0));
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.dim(1); ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    idx[i] = static_cast<std::int32_t>(best);
  }
  return idx;
}

double top1(const Tensor& logits, std::span<const std::int32_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw DimensionError("top1: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_str(logits.shape()));
  const auto pred = argmax_rows(logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<RangeRow> range_histogram(const ModelGraph& model, const Tensor& batch,
                                      std::size_t layer_index,
                                      const std::vector<QuantMode>& modes,
                                      const RangeConfig& cfg) {
  if (layer_index >= model.layers.size() ||
      model.layers[layer_index].kind == LayerKind::kFlatten)
    throw ConfigError("layer " + std::to_string(layer_index) + " is not a weighted layer");
  const LayerSpec& layer = model.layers[layer_index];
  const int beta = levels(cfg.activation_bits);
  std::vector<RangeRow> rows;
  for (QuantMode mode : modes) {
    if (mode != QuantMode::kDynamic && !layer.pre_bn)
      throw ConfigError(std::string(to_string(mode)) + " ranges need batch-norm statistics");
    switch (mode) {
      case QuantMode::kStatic:
        rows.push_back({layer_index, mode, 0, static_input_scale(layer.pre_bn->stats, cfg) * beta});
        break;
      case QuantMode::kSpiq: {
        const auto r = channel_ranges(layer.pre_bn->stats, cfg.lambda.resolve(cfg.activation_bits));
        for (std::size_t c = 0; c < r.size(); ++c) rows.push_back({layer_index, mode, c, r[c]});
        break;
      }
      case QuantMode::kDynamic: {
        const Tensor in = reference_layer_input(model, batch, layer_index);
        const std::size_t row = in.size() / in.dim(0);
        for (std::size_t i = 0; i < in.dim(0); ++i)
          rows.push_back({layer_index, mode, i, max_abs(in.values().subspan(i * row, row))});
        break;
      }
    }
  }
  return rows;
}

void write_ranges_csv(std::ostream& os, const std::vector<RangeRow>& rows) {
  os << "layer,mode,index,range\n";
  for (const auto& r : rows)
    os << r.layer << ',' << to_string(r.mode) << ',' << r.index << ',' << format_double(r.range)
       << '\n';
}

std::vector<SweepPoint> lambda_sweep(const ModelGraph& model, const Tensor& batch,
                                     std::span<const std::int32_t> labels,
                                     const std::vector<double>& lambda_grid,
                                     const QuantConfig& cfg) {
  if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
  std::vector<SweepPoint> curve;
  for (double lambda : lambda_grid) {
    QuantConfig c = cfg;
    c.lambda = Lambda::fixed(lambda);
    const Tensor logits = forward_quantized(quantize_model(model, c), batch);
    curve.push_back({lambda, top1(logits, labels)});
  }
  return curve;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
  os << "lambda,top1\n";
  for (const auto& p : points) os << format_double(p.lambda) << ',' << format_double(p.top1) << '\n';
}

}  // namespace spiq
