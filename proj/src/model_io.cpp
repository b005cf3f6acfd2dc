#include "spiq/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace spiq {

using json = nlohmann::json;

const char* to_string(ContainerKind kind) {
  switch (kind) {
    case ContainerKind::kModel: return "model";
    case ContainerKind::kQuantizedModel: return "quantized_model";
    case ContainerKind::kBatch: return "batch";
    case ContainerKind::kTensor: return "tensor";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(FormatErrorKind::kMalformedManifest, "not a decimal number: '" + s + "'");
  return v;
}

namespace {

constexpr std::size_t kMagicLen = 8;
constexpr std::size_t kHeaderLen = kMagicLen + 4;

enum class DType { kF32, kF64, kI32 };

std::size_t dtype_size(DType t) { return t == DType::kF64 ? 8 : 4; }
const char* dtype_name(DType t) {
  switch (t) {
    case DType::kF32: return "f32";
    case DType::kF64: return "f64";
    case DType::kI32: return "i32";
  }
  return "?";
}

void put_le(std::string& out, std::uint64_t v, std::size_t bytes) {
  for (std::size_t i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const char* p, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

class BlobWriter {
 public:
  json add(const Shape& shape, std::span<const double> v, DType t) {
    const std::size_t offset = blob_.size();
    for (double x : v) {
      if (t == DType::kF32)
        put_le(blob_, std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4);
      else
        put_le(blob_, std::bit_cast<std::uint64_t>(x), 8);
    }
    return descriptor(shape, t, offset);
  }
  json add(const Shape& shape, std::span<const std::int32_t> v) {
    const std::size_t offset = blob_.size();
    for (auto x : v) put_le(blob_, static_cast<std::uint32_t>(x), 4);
    return descriptor(shape, DType::kI32, offset);
  }
  json add_vector(const std::vector<double>& v) { return add({v.size()}, v, DType::kF32); }

  Bytes finish(json manifest) const {
    manifest["format_version"] = kFormatVersion;
    manifest["blob_bytes"] = blob_.size();
    const std::string text = manifest.dump();
    Bytes out(kMagic, kMagicLen);
    put_le(out, text.size(), 4);
    out += text;
    out += blob_;
    return out;
  }

 private:
  json descriptor(const Shape& shape, DType t, std::size_t offset) const {
    return {{"dtype", dtype_name(t)},
            {"shape", shape},
            {"offset", offset},
            {"length", blob_.size() - offset}};
  }

  std::string blob_;
};

struct Container {
  json manifest;
  std::string_view blobs;
};

Container parse_container(const Bytes& bytes) {
  const std::size_t have = std::min(bytes.size(), kMagicLen);
  if (std::memcmp(bytes.data(), kMagic, have) != 0)
    throw FormatError(FormatErrorKind::kBadMagic, "file does not start with SPIQMDL1");
  if (bytes.size() < kHeaderLen)
    throw FormatError(FormatErrorKind::kTruncated, "file ends inside the header");
  const std::uint64_t manifest_len = get_le(bytes.data() + kMagicLen, 4);
  if (manifest_len > bytes.size() - kHeaderLen)
    throw FormatError(FormatErrorKind::kTruncated,
                      "manifest of " + std::to_string(manifest_len) + " bytes runs past end of file");
  Container c;
  try {
    c.manifest = json::parse(bytes.begin() + kHeaderLen,
                             bytes.begin() + kHeaderLen + static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformedManifest, e.what());
  }
  if (!c.manifest.is_object())
    throw FormatError(FormatErrorKind::kMalformedManifest, "manifest is not a JSON object");
  const auto version = c.manifest.find("format_version");
  if (version == c.manifest.end() || !version->is_number_integer())
    throw FormatError(FormatErrorKind::kMalformedManifest, "manifest lacks format_version");
  if (version->get<std::int64_t>() != kFormatVersion)
    throw FormatError(FormatErrorKind::kUnsupportedVersion,
                      "format_version " + version->dump() + " is not supported");
  const auto blob_bytes = c.manifest.find("blob_bytes");
  if (blob_bytes == c.manifest.end() || !blob_bytes->is_number_unsigned())
    throw FormatError(FormatErrorKind::kMalformedManifest, "manifest lacks blob_bytes");
  const std::uint64_t declared = blob_bytes->get<std::uint64_t>();
  const std::size_t available = bytes.size() - kHeaderLen - manifest_len;
  if (declared > available)
    throw FormatError(FormatErrorKind::kTruncated,
                      "manifest declares " + std::to_string(declared) + " blob bytes, file has " +
                          std::to_string(available));
  if (declared < available)
    throw FormatError(FormatErrorKind::kLengthMismatch,
                      std::to_string(available - declared) + " trailing bytes after blobs");
  c.blobs = std::string_view(bytes).substr(kHeaderLen + manifest_len);
  return c;
}

ContainerKind kind_of(const json& manifest) {
  const std::string k = manifest.at("kind").get<std::string>();
  if (k == "model") return ContainerKind::kModel;
  if (k == "quantized_model") return ContainerKind::kQuantizedModel;
  if (k == "batch") return ContainerKind::kBatch;
  if (k == "tensor") return ContainerKind::kTensor;
  throw FormatError(FormatErrorKind::kMalformedManifest, "unknown container kind '" + k + "'");
}

void expect_kind(const json& manifest, ContainerKind want) {
  if (kind_of(manifest) != want)
    throw FormatError(FormatErrorKind::kInconsistent, std::string("expected a ") +
                                                          to_string(want) + " container, got " +
                                                          manifest.at("kind").dump());
}

class BlobReader {
 public:
  explicit BlobReader(std::string_view blobs) : blobs_(blobs) {}

  Tensor real_tensor(const json& d) const {
    const DType t = dtype(d);
    if (t == DType::kI32) throw FormatError(FormatErrorKind::kInconsistent, "expected real blob");
    Shape shape;
    const char* p = locate(d, t, shape);
    std::vector<double> v(element_count(shape));
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = t == DType::kF32
                 ? static_cast<double>(std::bit_cast<float>(
                       static_cast<std::uint32_t>(get_le(p + 4 * i, 4))))
                 : std::bit_cast<double>(get_le(p + 8 * i, 8));
    }
    return Tensor(std::move(shape), std::move(v));
  }

  IntTensor int_tensor(const json& d) const {
    if (dtype(d) != DType::kI32)
      throw FormatError(FormatErrorKind::kInconsistent, "expected i32 blob");
    Shape shape;
    const char* p = locate(d, DType::kI32, shape);
    std::vector<std::int32_t> v(element_count(shape));
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(p + 4 * i, 4)));
    return IntTensor(std::move(shape), std::move(v));
  }

  std::vector<double> vector(const json& d) const {
    Tensor t = real_tensor(d);
    if (t.rank() != 1) throw FormatError(FormatErrorKind::kInconsistent, "expected a vector blob");
    return {t.values().begin(), t.values().end()};
  }

 private:
  static DType dtype(const json& d) {
    const std::string s = d.at("dtype").get<std::string>();
    if (s == "f32") return DType::kF32;
    if (s == "f64") return DType::kF64;
    if (s == "i32") return DType::kI32;
    throw FormatError(FormatErrorKind::kMalformedManifest, "unknown dtype '" + s + "'");
  }

  const char* locate(const json& d, DType t, Shape& shape) const {
    shape = parse_shape(d.at("shape"));
    if (!d.at("offset").is_number_unsigned() || !d.at("length").is_number_unsigned())
      throw FormatError(FormatErrorKind::kMalformedManifest, "blob offset/length must be unsigned");
    const std::uint64_t offset = d.at("offset").get<std::uint64_t>();
    const std::uint64_t length = d.at("length").get<std::uint64_t>();
    if (offset > blobs_.size() || length > blobs_.size() - offset)
      throw FormatError(FormatErrorKind::kLengthMismatch,
                        "blob [" + std::to_string(offset) + ", +" + std::to_string(length) +
                            ") exceeds the " + std::to_string(blobs_.size()) + " blob bytes");
    // Shape extents were bounded by the blob size, so the product cannot overflow.
    if (element_count(shape) * dtype_size(t) != length)
      throw FormatError(FormatErrorKind::kLengthMismatch,
                        "blob of " + std::to_string(length) + " bytes does not hold shape " +
                            shape_str(shape) + " of " + dtype_name(t));
    return blobs_.data() + offset;
  }

  Shape parse_shape(const json& j) const {
    if (!j.is_array() || j.empty() || j.size() > 4)
      throw FormatError(FormatErrorKind::kMalformedManifest, "bad blob shape " + j.dump());
    Shape shape;
    std::uint64_t product = 1;
    for (const auto& e : j) {
      if (!e.is_number_unsigned())
        throw FormatError(FormatErrorKind::kMalformedManifest, "bad shape extent " + e.dump());
      const std::uint64_t v = e.get<std::uint64_t>();
      if (v == 0 || v > blobs_.size() || product > blobs_.size() / v)
        throw FormatError(FormatErrorKind::kLengthMismatch,
                          "shape " + j.dump() + " exceeds the blob section");
      product *= v;
      shape.push_back(static_cast<std::size_t>(v));
    }
    return shape;
  }

  std::string_view blobs_;
};

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformedManifest, e.what());
  } catch (const Error& e) {
    throw FormatError(FormatErrorKind::kInconsistent, e.what());
  }
}

Shape parse_input_shape(const json& j) {
  Shape s;
  for (const auto& e : j) {
    if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0 ||
        e.get<std::uint64_t>() > (std::uint64_t{1} << 24))
      throw FormatError(FormatErrorKind::kMalformedManifest, "bad input_shape " + j.dump());
    s.push_back(e.get<std::size_t>());
  }
  return s;
}

LayerKind parse_layer_kind(const json& layer) {
  const std::string k = layer.at("kind").get<std::string>();
  if (k == "fully-connected") return LayerKind::kFullyConnected;
  if (k == "conv2d") return LayerKind::kConv2d;
  if (k == "flatten") return LayerKind::kFlatten;
  throw FormatError(FormatErrorKind::kUnknownLayerKind, "layer kind '" + k + "'");
}

Activation parse_activation(const json& layer) {
  const std::string a = layer.at("activation").get<std::string>();
  if (a == "relu") return Activation::kRelu;
  if (a == "none") return Activation::kNone;
  throw FormatError(FormatErrorKind::kMalformedManifest, "unknown activation '" + a + "'");
}

Conv2dParams parse_conv(const json& layer) {
  Conv2dParams p;
  p.stride = layer.at("stride").get<std::size_t>();
  p.padding = layer.at("padding").get<std::size_t>();
  if (p.stride == 0 || p.stride > 1024 || p.padding > 1024)
    throw FormatError(FormatErrorKind::kMalformedManifest, "bad stride/padding");
  return p;
}

json encode_bn(BlobWriter& w, const std::optional<BatchNorm>& bn) {
  if (!bn) return nullptr;
  return {{"mean", w.add_vector(bn->stats.mean)},
          {"variance", w.add_vector(bn->stats.variance)},
          {"input_mean", w.add_vector(bn->input_mean)},
          {"input_variance", w.add_vector(bn->input_variance)}};
}

std::optional<BatchNorm> decode_bn(const BlobReader& r, const json& j) {
  if (j.is_null()) return std::nullopt;
  BatchNorm bn{{r.vector(j.at("mean")), r.vector(j.at("variance"))},
               r.vector(j.at("input_mean")),
               r.vector(j.at("input_variance"))};
  bn.validate();
  return bn;
}

json encode_bias(BlobWriter& w, const std::optional<std::vector<double>>& bias) {
  return bias ? w.add_vector(*bias) : json(nullptr);
}

std::optional<std::vector<double>> decode_bias(const BlobReader& r, const json& j) {
  if (j.is_null()) return std::nullopt;
  return r.vector(j);
}

json layer_header(LayerKind kind, Activation act, const Conv2dParams& conv) {
  json j = {{"kind", to_string(kind)}, {"activation", to_string(act)}};
  if (kind == LayerKind::kConv2d) {
    j["stride"] = conv.stride;
    j["padding"] = conv.padding;
  }
  return j;
}

json decimal_list(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(format_double(x));
  return a;
}

std::vector<double> parse_decimal_list(const json& j) {
  if (!j.is_array()) throw FormatError(FormatErrorKind::kMalformedManifest, "expected a list");
  std::vector<double> v;
  for (const auto& e : j) {
    const double x = parse_double(e.get<std::string>());
    if (!std::isfinite(x))
      throw FormatError(FormatErrorKind::kInconsistent, "non-finite scale " + e.dump());
    v.push_back(x);
  }
  return v;
}

}  // namespace

ContainerKind container_kind(const Bytes& bytes) {
  return guarded([&] { return kind_of(parse_container(bytes).manifest); });
}

Bytes encode_model(const ModelGraph& model) {
  model.validate();
  BlobWriter w;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json j = layer_header(layer.kind, layer.activation, layer.conv);
    if (layer.has_weights()) {
      j["weights"] = w.add(layer.weights.shape(), layer.weights.values(), DType::kF32);
      j["bias"] = encode_bias(w, layer.bias);
      j["bn"] = encode_bn(w, layer.pre_bn);
    }
    layers.push_back(std::move(j));
  }
  return w.finish({{"kind", "model"}, {"input_shape", model.input_shape}, {"layers", layers}});
}

ModelGraph decode_model(const Bytes& bytes) {
  return guarded([&] {
    const Container c = parse_container(bytes);
    expect_kind(c.manifest, ContainerKind::kModel);
    const BlobReader r(c.blobs);
    ModelGraph model;
    model.input_shape = parse_input_shape(c.manifest.at("input_shape"));
    for (const auto& j : c.manifest.at("layers")) {
      LayerSpec layer;
      layer.kind = parse_layer_kind(j);
      layer.activation = parse_activation(j);
      if (layer.kind == LayerKind::kConv2d) layer.conv = parse_conv(j);
      if (layer.has_weights()) {
        layer.weights = r.real_tensor(j.at("weights"));
        layer.bias = decode_bias(r, j.at("bias"));
        layer.pre_bn = decode_bn(r, j.at("bn"));
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  });
}

Bytes encode_quantized_model(const QuantizedModel& model) {
  model.validate();
  const QuantConfig& cfg = model.config;
  BlobWriter w;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json j = layer_header(layer.kind, layer.activation, layer.conv);
    if (layer.kind != LayerKind::kFlatten) {
      j["weight_shape"] = layer.weight_shape;
      j["bias"] = encode_bias(w, layer.bias);
      j["bn"] = encode_bn(w, layer.pre_bn);
      std::visit(
          [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, StaticPayload> || std::is_same_v<P, DynamicPayload>) {
              const auto& qt = p.weights.q_weights;
              j["q_weights"] = w.add(qt.q.shape(), qt.q.values());
              if (const auto* pc = std::get_if<PerChannelScale>(&qt.params.scale()))
                j["weight_scales"] = decimal_list(pc->values);
              else
                j["weight_scales"] = decimal_list({std::get<double>(qt.params.scale())});
              j["weight_max"] = decimal_list(p.weights.weight_max);
              if constexpr (std::is_same_v<P, StaticPayload>) {
                j["input_scale"] = format_double(p.input_scale);
                j["output_multiplier"] = decimal_list(p.output_multiplier);
              }
            } else if constexpr (std::is_same_v<P, FoldedLayer>) {
              j["q_weights"] = w.add(p.q_weights.q.shape(), p.q_weights.q.values());
              j["input_scales"] = decimal_list(p.input_scales.values);
              j["output_scale"] = decimal_list(p.output_scale.values);
            }
          },
          layer.payload);
    }
    layers.push_back(std::move(j));
  }
  json config = {{"mode", to_string(cfg.mode)},
                 {"weight_bits", cfg.weight_bits},
                 {"activation_bits", cfg.activation_bits},
                 {"lambda", cfg.lambda.resolve(cfg.activation_bits)},
                 {"lambda_source", cfg.lambda.is_auto() ? "auto" : "explicit"},
                 {"weight_granularity", to_string(cfg.granularity)}};
  return w.finish({{"kind", "quantized_model"},
                   {"quantized", true},
                   {"config", config},
                   {"input_shape", model.input_shape},
                   {"layers", layers}});
}

QuantizedModel decode_quantized_model(const Bytes& bytes) {
  return guarded([&] {
    const Container c = parse_container(bytes);
    expect_kind(c.manifest, ContainerKind::kQuantizedModel);
    const BlobReader r(c.blobs);
    const json& jc = c.manifest.at("config");
    QuantizedModel model;
    QuantConfig& cfg = model.config;
    cfg.mode = parse_mode(jc.at("mode").get<std::string>());
    cfg.weight_bits = jc.at("weight_bits").get<int>();
    cfg.activation_bits = jc.at("activation_bits").get<int>();
    cfg.granularity = parse_granularity(jc.at("weight_granularity").get<std::string>());
    const std::string source = jc.at("lambda_source").get<std::string>();
    const double lambda = jc.at("lambda").get<double>();
    if (source == "auto") {
      cfg.lambda = Lambda::automatic();
      if (lambda != lambda_default(cfg.activation_bits))
        throw FormatError(FormatErrorKind::kInconsistent, "auto lambda does not match bit-width");
    } else if (source == "explicit") {
      cfg.lambda = Lambda::fixed(lambda);
    } else {
      throw FormatError(FormatErrorKind::kMalformedManifest, "bad lambda_source");
    }
    cfg.validate();
    model.input_shape = parse_input_shape(c.manifest.at("input_shape"));
    for (const auto& j : c.manifest.at("layers")) {
      QuantizedLayer layer;
      layer.kind = parse_layer_kind(j);
      layer.activation = parse_activation(j);
      if (layer.kind == LayerKind::kConv2d) layer.conv = parse_conv(j);
      if (layer.kind != LayerKind::kFlatten) {
        const json& ws = j.at("weight_shape");
        if (!ws.is_array() || (ws.size() != 2 && ws.size() != 4))
          throw FormatError(FormatErrorKind::kMalformedManifest, "bad weight_shape");
        layer.weight_shape = ws.get<Shape>();
        layer.bias = decode_bias(r, j.at("bias"));
        layer.pre_bn = decode_bn(r, j.at("bn"));
        IntTensor q = r.int_tensor(j.at("q_weights"));
        if (q.shape() != layer.weight_shape)
          throw FormatError(FormatErrorKind::kInconsistent, "q_weights shape mismatch");
        const std::size_t out_axis = weight_channel_axis(layer.weight_shape, ChannelRole::kOutput);
        if (cfg.mode == QuantMode::kSpiq) {
          const std::size_t in_axis = weight_channel_axis(layer.weight_shape, ChannelRole::kInput);
          PerChannelScale in{parse_decimal_list(j.at("input_scales")), ChannelRole::kInput,
                             kActivationChannelAxis};
          PerChannelScale out{parse_decimal_list(j.at("output_scale")), ChannelRole::kOutput,
                              out_axis};
          if (in.values.size() != layer.weight_shape[in_axis] ||
              out.values.size() != layer.weight_shape[out_axis])
            throw FormatError(FormatErrorKind::kInconsistent, "spiq scale length mismatch");
          layer.payload = FoldedLayer{{std::move(q), QuantParams(cfg.weight_bits, out)},
                                      std::move(in), out, layer.bias, cfg.activation_bits};
        } else {
          std::vector<double> scales = parse_decimal_list(j.at("weight_scales"));
          Scale scale = scales.size() == 1 && cfg.granularity == WeightGranularity::kPerLayer
                            ? Scale(scales[0])
                            : Scale(PerChannelScale{scales, ChannelRole::kOutput, out_axis});
          if (cfg.granularity == WeightGranularity::kPerChannel &&
              scales.size() != layer.weight_shape[out_axis])
            throw FormatError(FormatErrorKind::kInconsistent, "weight scale length mismatch");
          WeightPayload wp{{std::move(q), QuantParams(cfg.weight_bits, std::move(scale))},
                           parse_decimal_list(j.at("weight_max"))};
          if (cfg.mode == QuantMode::kStatic) {
            layer.payload = StaticPayload{std::move(wp),
                                          parse_double(j.at("input_scale").get<std::string>()),
                                          parse_decimal_list(j.at("output_multiplier"))};
          } else {
            layer.payload = DynamicPayload{std::move(wp)};
          }
        }
      }
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  });
}

Bytes encode_batch(const Batch& batch) {
  if (batch.inputs.rank() != 2 && batch.inputs.rank() != 4)
    throw DimensionError("batch inputs must be [N, F] or [N, C, H, W]");
  BlobWriter w;
  json m = {{"kind", "batch"},
            {"inputs", w.add(batch.inputs.shape(), batch.inputs.values(), DType::kF32)}};
  if (batch.labels) {
    if (batch.labels->size() != batch.inputs.dim(0))
      throw DimensionError("labels length does not match batch size");
    m["labels"] = w.add({batch.labels->size()}, *batch.labels);
  } else {
    m["labels"] = nullptr;
  }
  return w.finish(m);
}

Batch decode_batch(const Bytes& bytes) {
  return guarded([&] {
    const Container c = parse_container(bytes);
    expect_kind(c.manifest, ContainerKind::kBatch);
    const BlobReader r(c.blobs);
    Batch b{r.real_tensor(c.manifest.at("inputs")), std::nullopt};
    if (b.inputs.rank() != 2 && b.inputs.rank() != 4)
      throw FormatError(FormatErrorKind::kInconsistent, "batch inputs must be rank 2 or 4");
    const json& lj = c.manifest.at("labels");
    if (!lj.is_null()) {
      IntTensor labels = r.int_tensor(lj);
      if (labels.rank() != 1 || labels.size() != b.inputs.dim(0))
        throw FormatError(FormatErrorKind::kInconsistent,
                          "labels length " + std::to_string(labels.size()) +
                              " does not match batch size " + std::to_string(b.inputs.dim(0)));
      b.labels = std::vector<std::int32_t>(labels.values().begin(), labels.values().end());
    }
    return b;
  });
}

Bytes encode_tensor(const Tensor& t, const std::string& name) {
  BlobWriter w;
  return w.finish({{"kind", "tensor"}, {"name", name}, {"tensor", w.add(t.shape(), t.values(), DType::kF64)}});
}

Tensor decode_tensor(const Bytes& bytes) {
  return guarded([&] {
    const Container c = parse_container(bytes);
    expect_kind(c.manifest, ContainerKind::kTensor);
    return BlobReader(c.blobs).real_tensor(c.manifest.at("tensor"));
  });
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace spiq
