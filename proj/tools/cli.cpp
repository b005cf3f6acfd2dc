#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "spiq/fixtures.hpp"
#include "spiq/report.hpp"

namespace spiq::cli {
namespace {

Lambda parse_lambda(const std::string& s) {
  if (s == "auto") return Lambda::automatic();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return Lambda::fixed(v);
  } catch (const std::logic_error&) {
  }
  throw ConfigError("--lambda must be 'auto' or a positive real, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::vector<QuantMode> parse_modes(const std::string& s) {
  std::vector<QuantMode> modes;
  for (const auto& m : split(s, ',')) modes.push_back(parse_mode(m));
  if (modes.empty()) throw ConfigError("--modes is empty");
  return modes;
}

std::pair<int, int> parse_bit_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int b = std::stoi(s);
      return {b, b};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::logic_error&) {
    throw ConfigError("--abits-range must look like lo..hi, got '" + s + "'");
  }
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, text);
}

struct QuantFlags {
  int wbits = 8;
  int abits = 8;
  std::string lambda = "auto";
  std::string granularity = "per-channel";

  void add_to(CLI::App* app) {
    app->add_option("--wbits", wbits, "weight bit-width [2, 8]")->capture_default_str();
    app->add_option("--abits", abits, "input/activation bit-width [2, 8]")->capture_default_str();
    app->add_option("--lambda", lambda, "range sensitivity: real or 'auto' (= abits)")
        ->capture_default_str();
    app->add_option("--weight-granularity", granularity, "per-layer | per-channel")
        ->capture_default_str();
  }

  QuantConfig config(QuantMode mode) const {
    QuantConfig c{wbits, abits, parse_lambda(lambda), mode, parse_granularity(granularity)};
    c.validate();
    return c;
  }
};

Batch load_batch_checked(const std::string& path) { return load_batch(path); }

// ---- subcommands ---------------------------------------------------------

int cmd_quantize(const std::string& model_path, const QuantFlags& flags, const std::string& mode,
                 const std::string& out_path, std::ostream& out) {
  const ModelGraph model = load_model(model_path);
  const QuantConfig cfg = flags.config(parse_mode(mode));
  const QuantizedModel q = quantize_model(model, cfg);
  save_quantized_model(q, out_path);

  out << "mode " << to_string(cfg.mode) << "  W" << cfg.weight_bits << "/A" << cfg.activation_bits
      << "  lambda " << cfg.lambda.resolve(cfg.activation_bits)
      << (cfg.lambda.is_auto() ? " (auto)" : "") << "  weights " << to_string(cfg.granularity)
      << "\n";
  for (std::size_t l = 0; l < q.layers.size(); ++l) {
    const auto& layer = q.layers[l];
    out << "  layer " << l << " " << to_string(layer.kind);
    if (const auto* sp = std::get_if<StaticPayload>(&layer.payload)) {
      out << "  input scale " << format_double(sp->input_scale);
    } else if (const auto* fl = std::get_if<FoldedLayer>(&layer.payload)) {
      const auto& v = fl->input_scales.values;
      out << "  input scales [" << format_double(*std::min_element(v.begin(), v.end())) << ", "
          << format_double(*std::max_element(v.begin(), v.end())) << "] over " << v.size()
          << " channels";
    } else if (std::holds_alternative<DynamicPayload>(layer.payload)) {
      out << "  input scale per sample";
    }
    out << "\n";
  }
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& batch_path,
             const std::string& reference_path, bool no_accuracy, const std::string& out_path,
             const std::string& logits_out, std::optional<std::size_t> features_layer,
             const std::string& features_out, std::ostream& out) {
  const Bytes bytes = read_file(model_path);
  const Batch batch = load_batch_checked(batch_path);
  if (!no_accuracy && !batch.labels)
    throw ConfigError("batch has no labels; pass --no-accuracy to skip top-1");

  EvalReport report;
  report.model_id = model_id(bytes);
  report.batch_size = batch.inputs.dim(0);
  Tensor logits;
  std::optional<Tensor> reference;
  std::optional<Tensor> features;
  if (container_kind(bytes) == ContainerKind::kQuantizedModel) {
    const QuantizedModel q = decode_quantized_model(bytes);
    report.model_kind = "quantized_model";
    report.config = q.config;
    logits = forward_quantized(q, batch.inputs);
    if (features_layer) features = forward_quantized(q, batch.inputs, features_layer);
    if (!reference_path.empty()) reference = forward_reference(load_model(reference_path), batch.inputs);
  } else {
    const ModelGraph m = decode_model(bytes);
    report.model_kind = "model";
    logits = forward_reference(m, batch.inputs);
    if (features_layer) features = forward_reference(m, batch.inputs, features_layer);
    reference = reference_path.empty() ? logits : forward_reference(load_model(reference_path), batch.inputs);
  }
  report.score = score_logits(logits, reference,
                              no_accuracy ? std::nullopt : batch.labels);
  const std::string text = to_json(report);
  if (out_path.empty()) out << text; else write_text(out_path, text);
  if (!logits_out.empty()) write_file(logits_out, encode_tensor(logits, "logits"));
  if (features) write_file(features_out, encode_tensor(*features, "layer" + std::to_string(*features_layer)));
  return kExitOk;
}

int cmd_bench(const std::string& model_path, const std::string& batch_path,
              const QuantFlags& flags, std::size_t repetitions, const std::string& out_path,
              std::ostream& out) {
  const Bytes bytes = read_file(model_path);
  const ModelGraph model = decode_model(bytes);
  const Batch batch = load_batch(batch_path);
  const std::vector<QuantConfig> configs = {flags.config(QuantMode::kStatic),
                                            flags.config(QuantMode::kDynamic),
                                            flags.config(QuantMode::kSpiq)};
  const auto timings = time_modes(model, configs, batch.inputs, repetitions);
  const double st = timings[0].median(), dy = timings[1].median(), sp = timings[2].median();
  const double boost = 100.0 * (dy - sp) / dy;

  out << std::fixed << std::setprecision(3);
  out << "Method  | " << model_id(bytes) << " (batch " << batch.inputs.dim(0) << ", "
      << repetitions << " reps, us/sample)\n";
  out << "dynamic | " << dy * 1e6 << "\n";
  out << "SPIQ    | " << sp * 1e6 << "\n";
  out << "static  | " << st * 1e6 << "\n";
  out << std::setprecision(1) << "boost   | " << boost << "%\n";

  if (!out_path.empty()) {
    nlohmann::json j = {{"model_id", model_id(bytes)},
                        {"batch_size", batch.inputs.dim(0)},
                        {"repetitions", repetitions},
                        {"median_seconds_per_sample",
                         {{"static", st}, {"dynamic", dy}, {"spiq", sp}}},
                        {"boost_percent", boost}};
    write_text(out_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-free static / dynamic / per-channel (SPIQ) input quantization"};
  app.require_subcommand(1);
  app.allow_extras(false);

  // quantize
  std::string model_path, batch_path, out_path, mode = "spiq";
  QuantFlags qflags;
  auto* quantize = app.add_subcommand("quantize", "quantize a model file");
  quantize->add_option("--model", model_path)->required();
  quantize->add_option("--out", out_path)->required();
  quantize->add_option("--mode", mode, "static | dynamic | spiq")->capture_default_str();
  qflags.add_to(quantize);

  // eval
  std::string reference_path, logits_out, features_out;
  std::optional<std::size_t> features_layer;
  bool no_accuracy = false;
  auto* eval = app.add_subcommand("eval", "evaluate a full-precision or quantized model");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--batch", batch_path)->required();
  eval->add_option("--out", out_path, "report JSON (stdout when omitted)");
  eval->add_option("--reference", reference_path, "full-precision model for output error");
  eval->add_flag("--no-accuracy", no_accuracy, "skip top-1 (batch without labels)");
  eval->add_option("--logits-out", logits_out, "write logits as a SPIQMDL1 tensor");
  eval->add_option("--features-layer", features_layer, "layer whose output to dump");
  eval->add_option("--features-out", features_out, "SPIQMDL1 tensor path for the feature map");

  // compare
  std::string modes = "static,dynamic,spiq", abits_range = "2..8";
  std::optional<std::uint64_t> seed;
  bool with_timing = false;
  QuantFlags cflags;
  auto* compare = app.add_subcommand("compare", "accuracy/error grid over modes and bit-widths");
  compare->add_option("--model", model_path)->required();
  compare->add_option("--batch", batch_path)->required();
  compare->add_option("--out", out_path)->required();
  compare->add_option("--modes", modes)->capture_default_str();
  compare->add_option("--abits-range", abits_range, "lo..hi")->capture_default_str();
  compare->add_option("--wbits", cflags.wbits)->capture_default_str();
  compare->add_option("--lambda", cflags.lambda)->capture_default_str();
  compare->add_option("--weight-granularity", cflags.granularity)->capture_default_str();
  compare->add_option("--seed", seed, "recorded in the report metadata");
  compare->add_flag("--with-timing", with_timing, "add per-sample time (not reproducible)");

  // ranges
  std::size_t layer = 0;
  QuantFlags rflags;
  std::string range_modes = "static,dynamic,spiq";
  auto* ranges = app.add_subcommand("ranges", "quantization range distribution at one layer (CSV)");
  ranges->add_option("--model", model_path)->required();
  ranges->add_option("--batch", batch_path)->required();
  ranges->add_option("--layer", layer)->required();
  ranges->add_option("--modes", range_modes)->capture_default_str();
  ranges->add_option("--abits", rflags.abits)->capture_default_str();
  ranges->add_option("--lambda", rflags.lambda)->capture_default_str();
  ranges->add_option("--out", out_path, "CSV (stdout when omitted)");

  // sweep
  std::string lambdas = "1,2,3,4,5,6,7,8,9,10,12,16";
  QuantFlags sflags;
  std::string sweep_mode = "spiq";
  auto* sweep = app.add_subcommand("sweep", "top-1 as a function of lambda (CSV)");
  sweep->add_option("--model", model_path)->required();
  sweep->add_option("--batch", batch_path)->required();
  sweep->add_option("--lambdas", lambdas, "comma-separated grid")->capture_default_str();
  sweep->add_option("--mode", sweep_mode)->capture_default_str();
  sweep->add_option("--wbits", sflags.wbits)->capture_default_str();
  sweep->add_option("--abits", sflags.abits)->capture_default_str();
  sweep->add_option("--weight-granularity", sflags.granularity)->capture_default_str();
  sweep->add_option("--out", out_path, "CSV (stdout when omitted)");

  // bench
  std::size_t repetitions = 10;
  QuantFlags bflags;
  auto* bench = app.add_subcommand("bench", "median per-sample time of static, dynamic and spiq");
  bench->add_option("--model", model_path)->required();
  bench->add_option("--batch", batch_path)->required();
  bench->add_option("--repetitions", repetitions)->capture_default_str();
  bench->add_option("--out", out_path, "timing JSON");
  bflags.add_to(bench);

  // genfixture
  std::string tmpl, model_out, batch_out;
  std::optional<std::uint64_t> fixture_seed;
  std::size_t batch_size = 1024;
  bool uniform_bn = false;
  auto* gen = app.add_subcommand("genfixture", "generate a seeded desk-scale model and batch");
  gen->add_option("--template", tmpl, "mlp-3x64 | cnn-2conv1fc | fc-16x4")->required();
  gen->add_option("--seed", fixture_seed)->required();
  gen->add_option("--batch-size", batch_size)->capture_default_str();
  gen->add_flag("--uniform-bn", uniform_bn, "share BN stats across the channels of each layer");
  gen->add_option("--model-out", model_out)->required();
  gen->add_option("--batch-out", batch_out)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (*quantize) return cmd_quantize(model_path, qflags, mode, out_path, out);
    if (*eval)
      return cmd_eval(model_path, batch_path, reference_path, no_accuracy, out_path, logits_out,
                      features_layer, features_out, out);
    if (*compare) {
      const auto [lo, hi] = parse_bit_range(abits_range);
      CompareRequest req{parse_modes(modes), lo, hi, cflags.wbits, parse_lambda(cflags.lambda),
                         parse_granularity(cflags.granularity), seed, with_timing};
      const Bytes bytes = read_file(model_path);
      CompareReport report = compare_grid(decode_model(bytes), load_batch(batch_path), req);
      write_text(out_path, to_json(report));
      return kExitOk;
    }
    if (*ranges) {
      const RangeConfig cfg{parse_lambda(rflags.lambda), rflags.abits};
      const auto rows = range_histogram(load_model(model_path), load_batch(batch_path).inputs,
                                        layer, parse_modes(range_modes), cfg);
      std::ostringstream csv;
      write_ranges_csv(csv, rows);
      if (out_path.empty()) out << csv.str(); else write_text(out_path, csv.str());
      return kExitOk;
    }
    if (*sweep) {
      std::vector<double> grid;
      for (const auto& s : split(lambdas, ',')) grid.push_back(parse_lambda(s).resolve(sflags.abits));
      const Batch batch = load_batch(batch_path);
      if (!batch.labels) throw ConfigError("sweep needs a labelled batch");
      const auto curve = lambda_sweep(load_model(model_path), batch.inputs, *batch.labels, grid,
                                      sflags.config(parse_mode(sweep_mode)));
      std::ostringstream csv;
      write_sweep_csv(csv, curve);
      if (out_path.empty()) out << csv.str(); else write_text(out_path, csv.str());
      return kExitOk;
    }
    if (*bench) return cmd_bench(model_path, batch_path, bflags, repetitions, out_path, out);
    if (*gen) {
      const Fixture f = generate_fixture(tmpl, *fixture_seed, {batch_size, uniform_bn});
      save_model(f.model, model_out);
      save_batch(f.batch, batch_out);
      out << "wrote " << model_out << " (" << tmpl << ", seed " << *fixture_seed << ") and "
          << batch_out << " (" << batch_size << " samples)\n";
      return kExitOk;
    }
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace spiq::cli
