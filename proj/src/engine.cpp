#include "spiq/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <ctime>
#include <cstdint>

namespace spiq {

SerialScope::SerialScope() : saved_threads_(omp_get_max_threads()) { omp_set_num_threads(1); }
SerialScope::~SerialScope() { omp_set_num_threads(saved_threads_); }

std::vector<double> static_output_multiplier(double input_scale,
                                             const std::vector<double>& weight_max,
                                             std::size_t out_channels, int weight_bits) {
  const double beta = levels(weight_bits);
  std::vector<double> mult(out_channels);
  for (std::size_t n = 0; n < out_channels; ++n)
    mult[n] = (input_scale * weight_max[weight_max.size() == 1 ? 0 : n]) / beta;
  return mult;
}

namespace {

std::string layer_name(std::size_t l, LayerKind kind) {
  return "layer " + std::to_string(l) + " (" + to_string(kind) + ")";
}

WeightPayload quantize_weights(const Tensor& w, const QuantConfig& cfg) {
  if (cfg.granularity == WeightGranularity::kPerLayer)
    return {quantize(w, QuantParams(cfg.weight_bits, weight_scale_per_layer(w, cfg.weight_bits))),
            {max_abs(w.values())}};
  return {quantize(w, QuantParams(cfg.weight_bits, weight_scale_per_channel(w, cfg.weight_bits))),
          output_channel_max_abs(w)};
}

const IntTensor& payload_weights(const LayerPayload& p) {
  if (const auto* s = std::get_if<StaticPayload>(&p)) return s->weights.q_weights.q;
  if (const auto* d = std::get_if<DynamicPayload>(&p)) return d->weights.q_weights.q;
  return std::get<FoldedLayer>(p).q_weights.q;
}

Tensor apply_bn(const Tensor& x, const std::optional<BatchNorm>& bn) {
  if (!bn) return x;
  const auto [scale, shift] = bn->affine();
  return kernels::affine_channels(x, scale, shift);
}

Tensor finish(Tensor y, const std::optional<std::vector<double>>& bias, Activation act) {
  if (bias) {
    const std::vector<double> ones(bias->size(), 1.0);
    y = kernels::affine_channels(y, ones, *bias);
  }
  return act == Activation::kRelu ? kernels::relu(y) : y;
}

/// Quantizes sample rows with one scale per channel, or per (sample, channel)
/// when `per_sample` is set.
IntTensor quantize_rows(const Tensor& x, std::span<const double> scales, bool per_sample,
                        int beta) {
  const auto l = detail::channel_layout(x.shape());
  IntTensor q(x.shape());
  const auto rows = static_cast<std::int64_t>(l.outer * l.channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double s = per_sample ? scales[r / l.channels] : scales[r % l.channels];
    const std::size_t base = r * l.inner;
    for (std::size_t i = 0; i < l.inner; ++i) q[base + i] = quantize_value(x[base + i], s, beta);
  }
  return q;
}

/// out = multiplier * acc, multiplier indexed by output channel (and sample
/// when `per_sample`).
Tensor dequantize_acc(const AccTensor& acc, std::span<const double> mult, bool per_sample) {
  const auto l = detail::channel_layout(acc.shape());
  Tensor out(acc.shape());
  const auto rows = static_cast<std::int64_t>(l.outer * l.channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double m = per_sample ? mult[r] : mult[r % l.channels];
    const std::size_t base = r * l.inner;
    for (std::size_t i = 0; i < l.inner; ++i)
      out[base + i] = m * static_cast<double>(acc[base + i]);
  }
  return out;
}

AccTensor integer_kernel(const QuantizedLayer& layer, const IntTensor& q) {
  const IntTensor& w = payload_weights(layer.payload);
  return layer.kind == LayerKind::kConv2d ? kernels::conv2d_int(q, w, layer.conv)
                                          : kernels::matmul_int(q, w);
}

Tensor run_quantized_layer(const QuantizedLayer& layer, const QuantConfig& cfg, const Tensor& in) {
  const Tensor x = apply_bn(in, layer.pre_bn);
  const int beta_a = levels(cfg.activation_bits);
  const auto l = detail::channel_layout(x.shape());
  const std::size_t out_channels =
      layer.kind == LayerKind::kConv2d ? layer.weight_shape[0] : layer.weight_shape[1];

  if (const auto* sp = std::get_if<StaticPayload>(&layer.payload)) {
    const std::vector<double> scales(l.channels, sp->input_scale);
    const AccTensor acc = integer_kernel(layer, quantize_rows(x, scales, false, beta_a));
    return finish(dequantize_acc(acc, sp->output_multiplier, false), layer.bias,
                  layer.activation);
  }
  if (const auto* fl = std::get_if<FoldedLayer>(&layer.payload)) {
    const AccTensor acc =
        integer_kernel(layer, quantize_rows(x, fl->input_scales.values, false, beta_a));
    return finish(dequantize_acc(acc, fl->output_scale.values, false), layer.bias,
                  layer.activation);
  }
  const auto& dp = std::get<DynamicPayload>(layer.payload);
  const std::size_t n = l.outer;
  const std::size_t per_sample = x.size() / n;
  std::vector<double> scales(n);
  std::vector<double> mult(n * out_channels);
  const double beta_w = levels(cfg.weight_bits);
  const auto& wmax = dp.weights.weight_max;
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(n); ++b) {
    scales[b] = dynamic_input_scale(
        std::span<const double>(x.data() + b * per_sample, per_sample), cfg.activation_bits);
    for (std::size_t o = 0; o < out_channels; ++o)
      mult[b * out_channels + o] = (scales[b] * wmax[wmax.size() == 1 ? 0 : o]) / beta_w;
  }
  const AccTensor acc = integer_kernel(layer, quantize_rows(x, scales, true, beta_a));
  return finish(dequantize_acc(acc, mult, true), layer.bias, layer.activation);
}

Tensor flatten(const Tensor& x) { return x.reshaped({x.dim(0), x.size() / x.dim(0)}); }

void check_batch(const Shape& model_input, const Tensor& batch) {
  if (batch.rank() < 2 || batch.shape() != batched(batch.dim(0), model_input))
    throw DimensionError("batch shape " + shape_str(batch.shape()) +
                         " does not match model input " + shape_str(model_input));
}

Tensor run_reference_layer(const LayerSpec& layer, const Tensor& in) {
  if (layer.kind == LayerKind::kFlatten) return flatten(in);
  const Tensor x = apply_bn(in, layer.pre_bn);
  Tensor y = layer.kind == LayerKind::kConv2d ? kernels::conv2d(x, layer.weights, layer.conv)
                                              : kernels::matmul(x, layer.weights);
  return finish(std::move(y), layer.bias, layer.activation);
}

}  // namespace

void QuantizedModel::validate() const {
  config.validate();
  if (layers.empty()) throw InvariantError("quantized model has no layers");
  const int beta_w = levels(config.weight_bits);
  Shape cur = input_shape;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& p = layer.payload;
    const std::string where = layer_name(l, layer.kind);
    try {
      cur = layer_output_shape(layer.kind, layer.weight_shape, layer.conv, cur);
    } catch (const DimensionError& e) {
      throw InvariantError(where + ": " + e.what());
    }
    if (layer.kind == LayerKind::kFlatten) {
      if (!std::holds_alternative<std::monostate>(p))
        throw InvariantError(where + ": flatten carries a payload");
      continue;
    }
    const bool ok =
        (config.mode == QuantMode::kStatic && std::holds_alternative<StaticPayload>(p)) ||
        (config.mode == QuantMode::kDynamic && std::holds_alternative<DynamicPayload>(p)) ||
        (config.mode == QuantMode::kSpiq && std::holds_alternative<FoldedLayer>(p));
    if (!ok) throw InvariantError(where + ": payload does not match mode " + to_string(config.mode));

    const bool conv = layer.kind == LayerKind::kConv2d;
    const std::size_t in_ch = conv ? layer.weight_shape[1] : layer.weight_shape[0];
    const std::size_t out_ch = conv ? layer.weight_shape[0] : layer.weight_shape[1];
    const std::size_t fan_in = conv ? in_ch * layer.weight_shape[2] * layer.weight_shape[3] : in_ch;
    if (fan_in > kMaxFanIn) throw InvariantError(where + ": fan-in exceeds the accumulator cap");
    const IntTensor& q = payload_weights(p);
    if (q.shape() != layer.weight_shape)
      throw InvariantError(where + ": quantized weights do not match the weight shape");
    for (auto v : q.values())
      if (v < -beta_w || v > beta_w) throw InvariantError(where + ": weight outside [-beta, beta]");
    if (layer.bias && layer.bias->size() != out_ch)
      throw InvariantError(where + ": bias length mismatch");
    if (layer.pre_bn && layer.pre_bn->channels() != in_ch)
      throw InvariantError(where + ": batch-norm channel mismatch");

    auto check_len = [&](std::size_t got, std::size_t want, const char* what) {
      if (got != want)
        throw InvariantError(where + ": " + what + " has " + std::to_string(got) +
                             " entries, expected " + std::to_string(want));
    };
    const std::size_t wmax_len =
        config.granularity == WeightGranularity::kPerLayer ? std::size_t{1} : out_ch;
    if (const auto* sp = std::get_if<StaticPayload>(&p)) {
      check_len(sp->weights.weight_max.size(), wmax_len, "weight_max");
      check_len(sp->output_multiplier.size(), out_ch, "output_multiplier");
      if (!(sp->input_scale > 0.0)) throw InvariantError(where + ": non-positive input scale");
    } else if (const auto* dp = std::get_if<DynamicPayload>(&p)) {
      check_len(dp->weights.weight_max.size(), wmax_len, "weight_max");
    } else {
      const auto& fl = std::get<FoldedLayer>(p);
      check_len(fl.input_scales.values.size(), in_ch, "input_scales");
      check_len(fl.output_scale.values.size(), out_ch, "output_scale");
    }
  }
}

QuantizedModel quantize_model(const ModelGraph& model, const QuantConfig& cfg) {
  cfg.validate();
  model.validate();
  QuantizedModel q{cfg, model.input_shape, {}};
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LayerSpec& spec = model.layers[l];
    QuantizedLayer layer{spec.kind, spec.weights.shape(), spec.conv, spec.activation,
                         spec.pre_bn,  spec.bias,             {}};
    if (spec.kind != LayerKind::kFlatten) {
      if (cfg.mode != QuantMode::kDynamic && !spec.pre_bn)
        throw ConfigError(layer_name(l, spec.kind) + ": " + to_string(cfg.mode) +
                          " input quantization needs batch-norm statistics before the layer");
      switch (cfg.mode) {
        case QuantMode::kStatic: {
          StaticPayload sp{quantize_weights(spec.weights, cfg),
                           static_input_scale(spec.pre_bn->stats, cfg.range()),
                           {}};
          sp.output_multiplier = static_output_multiplier(
              sp.input_scale, sp.weights.weight_max, spec.output_channels(), cfg.weight_bits);
          layer.payload = std::move(sp);
          break;
        }
        case QuantMode::kDynamic:
          layer.payload = DynamicPayload{quantize_weights(spec.weights, cfg)};
          break;
        case QuantMode::kSpiq:
          layer.payload = build_spiq_layer(spec.weights, spec.bias, spec.pre_bn->stats,
                                           {cfg.range(), cfg.weight_bits});
          break;
      }
    }
    q.layers.push_back(std::move(layer));
  }
  return q;
}

Tensor forward_reference(const ModelGraph& model, const Tensor& batch,
                         std::optional<std::size_t> stop_after) {
  model.validate();
  check_batch(model.input_shape, batch);
  Tensor x = batch;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    x = run_reference_layer(model.layers[l], x);
    if (stop_after && *stop_after == l) break;
  }
  return x;
}

Tensor reference_layer_input(const ModelGraph& model, const Tensor& batch, std::size_t index) {
  if (index >= model.layers.size())
    throw ConfigError("layer index " + std::to_string(index) + " out of range");
  Tensor x = index == 0 ? batch : forward_reference(model, batch, index - 1);
  if (index == 0) check_batch(model.input_shape, batch);
  return apply_bn(x, model.layers[index].pre_bn);
}

Tensor forward_quantized(const QuantizedModel& qmodel, const Tensor& batch,
                         std::optional<std::size_t> stop_after) {
  qmodel.validate();
  check_batch(qmodel.input_shape, batch);
  Tensor x = batch;
  for (std::size_t l = 0; l < qmodel.layers.size(); ++l) {
    const QuantizedLayer& layer = qmodel.layers[l];
    x = layer.kind == LayerKind::kFlatten ? flatten(x)
                                          : run_quantized_layer(layer, qmodel.config, x);
    if (stop_after && *stop_after == l) break;
  }
  return x;
}

double InferenceTiming::median() const {
  if (per_sample_seconds.empty()) return 0.0;
  std::vector<double> v = per_sample_seconds;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

// CPU time of the calling thread; time spent descheduled is not counted.
double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

}  // namespace

std::vector<InferenceTiming> time_modes(const ModelGraph& model,
                                        const std::vector<QuantConfig>& configs,
                                        const Tensor& batch, std::size_t repetitions) {
  if (repetitions < 3) throw ConfigError("timing needs at least 3 repetitions");
  if (configs.empty()) throw ConfigError("timing needs at least one configuration");
  std::vector<QuantizedModel> qmodels;
  std::vector<InferenceTiming> timings;
  for (const auto& cfg : configs) {
    qmodels.push_back(quantize_model(model, cfg));
    timings.push_back({cfg.mode, batch.dim(0), {}});
  }
  // Each repetition runs the whole batch through every configuration, in
  // slices interleaved across configurations (starting config rotates), so
  // preemption spikes and clock drift land on all of them alike.
  const std::size_t n = batch.dim(0);
  const std::size_t row = batch.size() / n;
  std::vector<Tensor> slices;
  for (std::size_t lo = 0; lo < n; lo += kTimingSlice) {
    const std::size_t len = std::min(kTimingSlice, n - lo);
    Shape shape = batch.shape();
    shape[0] = len;
    slices.emplace_back(shape, std::vector<double>(batch.data() + lo * row,
                                                   batch.data() + (lo + len) * row));
  }
  SerialScope serial;
  for (const auto& q : qmodels) forward_quantized(q, batch);
  for (std::size_t r = 0; r < repetitions; ++r) {
    std::vector<double> total(qmodels.size(), 0.0);
    for (std::size_t j = 0; j < slices.size(); ++j)
      for (std::size_t k = 0; k < qmodels.size(); ++k) {
        const std::size_t c = (r + j + k) % qmodels.size();
        const double t0 = thread_cpu_seconds();
        const Tensor out = forward_quantized(qmodels[c], slices[j]);
        total[c] += thread_cpu_seconds() - t0;
      }
    for (std::size_t c = 0; c < qmodels.size(); ++c)
      timings[c].per_sample_seconds.push_back(total[c] / static_cast<double>(n));
  }
  return timings;
}

}  // namespace spiq
