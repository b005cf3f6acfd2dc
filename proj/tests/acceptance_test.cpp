// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "json.hpp"
#include "spiq/engine.hpp"
#include "spiq/fixtures.hpp"
#include "spiq/kernels.hpp"
#include "spiq/metrics.hpp"
#include "spiq/model_io.hpp"

namespace spiq {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = d(rng);
  return t;
}

BatchNormStats random_stats(std::mt19937_64& rng, std::size_t channels, double zero_var_p = 0.0) {
  std::normal_distribution<double> mean(0.0, 1.0);
  std::uniform_real_distribution<double> log_std(std::log(0.05), std::log(3.0));
  std::bernoulli_distribution zero(zero_var_p);
  BatchNormStats bn;
  for (std::size_t c = 0; c < channels; ++c) {
    bn.mean.push_back(mean(rng));
    const double sd = zero(rng) ? 0.0 : std::exp(log_std(rng));
    bn.variance.push_back(sd * sd);
  }
  return bn;
}

QuantConfig make_config(QuantMode mode, int abits, int wbits = 8) {
  QuantConfig c;
  c.mode = mode;
  c.activation_bits = abits;
  c.weight_bits = wbits;
  return c;
}

double relative_frobenius(const Tensor& got, const Tensor& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Divides each input channel by its scale.
Tensor divide_channels(const Tensor& x, const std::vector<double>& s) {
  std::vector<double> inv(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) inv[i] = 1.0 / s[i];
  Tensor out = x;
  const std::size_t inner = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / s[(i / inner) % s.size()];
  return out;
}

// 1 -------------------------------------------------------------------------
Outcome folding_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> fc_dim(1, 64), cin(1, 8), cout(1, 8), hw(3, 9);
  std::uniform_real_distribution<double> log_s(std::log(1e-3), std::log(1e2));
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const bool conv = t >= 100;
    Tensor w, x;
    std::size_t channels;
    if (!conv) {
      channels = fc_dim(rng);
      w = random_tensor({channels, fc_dim(rng)}, rng);
      x = random_tensor({8, channels}, rng, 2.0);
    } else {
      channels = cin(rng);
      const std::size_t k = (t % 2) ? 3 : 1, h = hw(rng);
      w = random_tensor({cout(rng), channels, k, k}, rng);
      x = random_tensor({2, channels, h, h}, rng, 2.0);
    }
    std::vector<double> s(channels);
    for (auto& v : s) v = std::exp(log_s(rng));
    const Tensor folded = fold_input_scales(w, s);
    const Tensor xs = divide_channels(x, s);
    const Conv2dParams p{1, (t % 3 == 0) ? 1u : 0u};
    const Tensor got = conv ? kernels::conv2d(xs, folded, p) : kernels::matmul(xs, folded);
    const Tensor want = conv ? kernels::conv2d(x, w, p) : kernels::matmul(x, w);
    worst = std::max(worst, relative_frobenius(got, want));
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "200 layers (100 FC, 100 conv), worst relative error %.2e (<= 1e-10), %.2fs (< 10s)",
                worst, secs);
  return {worst <= 1e-10 && secs < 10.0, buf};
}

// 2 -------------------------------------------------------------------------
Outcome scale_ordering() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> ch(1, 128);
  std::uniform_real_distribution<double> lam(0.5, 10.0);
  std::size_t violations = 0, zero_var_channels = 0;
  for (int t = 0; t < 1000; ++t) {
    const BatchNormStats bn = random_stats(rng, ch(rng), 0.2);
    for (double v : bn.variance) zero_var_channels += v == 0.0;
    const RangeConfig cfg{t % 2 ? Lambda::automatic() : Lambda::fixed(lam(rng)), 2 + t % 7};
    const double st = static_input_scale(bn, cfg);
    for (double v : per_channel_input_scales(bn, cfg).values) violations += !(v <= st);
  }
  return {violations == 0 && zero_var_channels > 0,
          std::to_string(violations) + " violations over 1000 stats (" +
              std::to_string(zero_var_channels) + " zero-variance channels)"};
}

// 3 -------------------------------------------------------------------------
Outcome half_scale_bound() {
  std::mt19937_64 rng(303);
  std::size_t violations = 0;
  for (int bits : {2, 4, 8}) {
    const double s = std::exp(std::uniform_real_distribution<double>(-5.0, 3.0)(rng));
    const int beta = levels(bits);
    std::uniform_real_distribution<double> d(-s * beta, s * beta);
    Tensor x(Shape{100000});
    for (auto& v : x.values()) v = d(rng);
    const Tensor back = dequantize(quantize(x, QuantParams(bits, s)));
    for (std::size_t i = 0; i < x.size(); ++i) violations += std::abs(x[i] - back[i]) > s / 2;
  }
  return {violations == 0, std::to_string(violations) + " violations over 3 x 10^5 samples"};
}

// 4 -------------------------------------------------------------------------
double mean_row_error(const Tensor& x, const QuantParams& p) {
  return summarize(row_errors(x, dequantize(quantize(x, p)), ErrorNorm::kL2)).mean;
}

Outcome input_error_dominance() {
  const auto t0 = Clock::now();
  const int trials = 1000;
  std::ostringstream detail;
  bool pass = true;
  for (int bits : {4, 6, 8}) {
    const RangeConfig cfg{Lambda::fixed(bits), bits};
    int wins = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : wins)
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t seed = 4000 + static_cast<std::uint64_t>(bits) * 100000 + t;
      std::mt19937_64 rng(seed);
      const BatchNormStats bn = random_stats(rng, 4 + rng() % 61);
      const Tensor x = gaussian_inputs(bn, 1000, seed);
      const double st = mean_row_error(x, QuantParams(bits, static_input_scale(bn, cfg)));
      const double pc = mean_row_error(x, QuantParams(bits, per_channel_input_scales(bn, cfg)));
      wins += pc <= st;
    }
    pass = pass && wins >= trials * 95 / 100;
    detail << "b" << bits << " " << wins / 10.0 << "% ";
  }
  const double secs = seconds_since(t0);
  detail << "of trials (>= 95%), " << secs << "s (< 60s)";
  return {pass && secs < 60.0, detail.str()};
}

// 5 -------------------------------------------------------------------------
Outcome output_error_dominance() {
  const auto t0 = Clock::now();
  const int pairs = 50;
  std::ostringstream detail;
  bool pass = true;
  for (int bits : {4, 8}) {
    int failures = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : failures)
    for (int t = 0; t < pairs; ++t) {
      const std::uint64_t seed = 5000 + static_cast<std::uint64_t>(bits) * 1000 + t;
      std::mt19937_64 rng(seed);
      const std::size_t n_in = 16 + rng() % 49, n_out = 4 + rng() % 29;
      const Tensor w = random_tensor({n_in, n_out}, rng, std::sqrt(2.0 / n_in));
      const BatchNormStats bn = random_stats(rng, n_in);
      const auto e = layer_output_error(w, bn, make_config(QuantMode::kSpiq, bits, bits), 1000, seed);
      failures += e.at(QuantMode::kSpiq).mean > e.at(QuantMode::kStatic).mean;
    }
    pass = pass && failures * 100 < 5 * pairs;
    detail << "b" << bits << " " << failures << "/" << pairs << " failures; ";
  }
  const double secs = seconds_since(t0);
  detail << "(< 5%), " << secs << "s (< 120s)";
  return {pass && secs < 120.0, detail.str()};
}

// 6 -------------------------------------------------------------------------
Outcome neuron_contract() {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::size_t mismatches = 0, checked = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n_in = 1 + rng() % 64, n_out = 1 + rng() % 32;
    ModelGraph m{{n_in}, {}};
    LayerSpec l;
    l.weights = random_tensor({n_in, n_out}, rng);
    l.bias = std::vector<double>(n_out);
    for (auto& b : *l.bias) b = nd(rng);
    BatchNorm bn{random_stats(rng, n_in), std::vector<double>(n_in), std::vector<double>(n_in)};
    for (std::size_t c = 0; c < n_in; ++c) {
      bn.input_mean[c] = nd(rng);
      bn.input_variance[c] = std::exp(nd(rng));
      if (bn.stats.variance[c] == 0.0) bn.stats.variance[c] = 1.0;
    }
    l.pre_bn = bn;
    m.layers.push_back(l);
    const auto q = quantize_model(m, make_config(QuantMode::kSpiq, 2 + t % 7, 2 + (t / 7) % 7));
    const Tensor x = random_tensor({4, n_in}, rng, 2.0);
    const Tensor out = forward_quantized(q, x);
    const Tensor post_bn = reference_layer_input(m, x, 0);
    const auto& fl = std::get<FoldedLayer>(q.layers[0].payload);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t n = 0; n < n_out; ++n, ++checked)
        mismatches += out.at(r, n) !=
                      spiq_neuron_contract({post_bn.data() + r * n_in, n_in}, fl, n);
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(checked) + " outputs (exact)"};
}

// 7 -------------------------------------------------------------------------
Outcome uniform_stats_reduction() {
  const auto templates = fixture_templates();
  int fixtures = 0, identical = 0;
  for (std::uint64_t seed = 1; fixtures < 20; ++seed)
    for (const auto& name : templates) {
      if (fixtures == 20) break;
      ++fixtures;
      const Fixture f = generate_fixture(name, seed, {.batch_size = 128, .uniform_bn_stats = true});
      const int abits = 2 + fixtures % 7;
      const Tensor st = forward_quantized(quantize_model(f.model, make_config(QuantMode::kStatic, abits)),
                                          f.batch.inputs);
      const Tensor sp = forward_quantized(quantize_model(f.model, make_config(QuantMode::kSpiq, abits)),
                                          f.batch.inputs);
      identical += st == sp;
    }
  return {identical == fixtures,
          std::to_string(identical) + "/" + std::to_string(fixtures) + " fixtures bit-identical"};
}

// 8 -------------------------------------------------------------------------
Outcome accuracy_trend() {
  const Fixture f = generate_fixture("cnn-2conv1fc", 1, {.batch_size = 1024});
  const auto& labels = *f.batch.labels;
  const double ref = top1(forward_reference(f.model, f.batch.inputs), labels);
  std::map<std::pair<QuantMode, int>, double> acc;
  for (int abits : {3, 4, 6, 8})
    for (QuantMode mode : {QuantMode::kStatic, QuantMode::kDynamic, QuantMode::kSpiq})
      acc[{mode, abits}] = top1(
          forward_quantized(quantize_model(f.model, make_config(mode, abits, 8)), f.batch.inputs), labels);
  bool pass = true;
  std::ostringstream detail;
  detail.precision(3);
  detail << std::fixed << "ref " << ref;
  for (int abits : {3, 4, 6}) {
    const double st = acc[{QuantMode::kStatic, abits}], sp = acc[{QuantMode::kSpiq, abits}];
    pass = pass && sp >= st;
    detail << "; a" << abits << " spiq " << sp << " vs static " << st;
  }
  detail << "; a8";
  for (QuantMode mode : {QuantMode::kStatic, QuantMode::kDynamic, QuantMode::kSpiq}) {
    const double a = acc[{mode, 8}];
    pass = pass && a >= 0.95 * ref;
    detail << " " << to_string(mode) << " " << a;
  }
  detail << " (>= " << 0.95 * ref << ")";
  return {pass, detail.str()};
}

// 9 -------------------------------------------------------------------------
Outcome timing_direction() {
  const Fixture f = generate_fixture("cnn-2conv1fc", 1, {.batch_size = 256});
  const auto t = time_modes(f.model,
                            {make_config(QuantMode::kStatic, 8), make_config(QuantMode::kDynamic, 8),
                             make_config(QuantMode::kSpiq, 8)},
                            f.batch.inputs, 10);
  const double st = t[0].median(), dy = t[1].median(), sp = t[2].median();
  const double rel = std::abs(sp - st) / st;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "median us/sample: static %.2f, dynamic %.2f, spiq %.2f; spiq <= dynamic, |spiq-static| = %.2f%% (<= 2%%)",
                st * 1e6, dy * 1e6, sp * 1e6, 100 * rel);
  return {sp <= dy && rel <= 0.02, buf};
}

// CLI helpers ---------------------------------------------------------------
int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spiq");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

nlohmann::json manifest_of(const Bytes& b) {
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[8 + i])) << (8 * i);
  return nlohmann::json::parse(b.substr(12, len));
}

Bytes with_manifest(const Bytes& b, const nlohmann::json& m) {
  std::uint32_t old = 0;
  for (int i = 0; i < 4; ++i) old |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[8 + i])) << (8 * i);
  const std::string text = m.dump();
  Bytes out = b.substr(0, 8);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
  return out + text + b.substr(12 + old);
}

// 10 ------------------------------------------------------------------------
Outcome lambda_auto_wiring(const fs::path& dir) {
  const std::string model = (dir / "m.spiq").string();
  bool pass = run_cli({"genfixture", "--template", "cnn-2conv1fc", "--seed", "1", "--batch-size", "16",
                       "--model-out", model, "--batch-out", (dir / "b.spiq").string()}) == 0;
  std::ostringstream detail;
  for (int abits : {4, 8}) {
    const std::string out = (dir / ("q" + std::to_string(abits) + ".spiq")).string();
    pass = pass && run_cli({"quantize", "--model", model, "--out", out, "--mode", "spiq", "--lambda", "auto",
                            "--abits", std::to_string(abits)}) == 0;
    const auto cfg = manifest_of(read_file(out)).at("config");
    const double lambda = cfg.at("lambda").get<double>();
    pass = pass && lambda == abits && cfg.at("lambda_source") == "auto";
    detail << "a" << abits << " -> lambda " << lambda << " (" << cfg.at("lambda_source").get<std::string>()
           << ") ";
  }
  return {pass, detail.str()};
}

// 11 ------------------------------------------------------------------------
Outcome cli_determinism(const fs::path& dir) {
  const auto p = [&](const std::string& n) { return (dir / n).string(); };
  bool ok = run_cli({"genfixture", "--template", "cnn-2conv1fc", "--seed", "5", "--batch-size", "128",
                     "--model-out", p("m.spiq"), "--batch-out", p("b.spiq")}) == 0;
  std::ostringstream detail;
  for (const std::string run : {"1", "2"}) {
    ok = ok && run_cli({"quantize", "--model", p("m.spiq"), "--out", p("q" + run), "--mode", "spiq",
                        "--abits", "4"}) == 0;
    ok = ok && run_cli({"eval", "--model", p("q" + run), "--batch", p("b.spiq"), "--reference",
                        p("m.spiq"), "--out", p("e" + run)}) == 0;
    ok = ok && run_cli({"compare", "--model", p("m.spiq"), "--batch", p("b.spiq"), "--out", p("c" + run),
                        "--abits-range", "2..8", "--seed", "7"}) == 0;
  }
  bool pass = ok;
  for (const char* stem : {"q", "e", "c"}) {
    const bool same = ok && read_file(p(std::string(stem) + "1")) == read_file(p(std::string(stem) + "2"));
    pass = pass && same;
    detail << (stem[0] == 'q' ? "quantize" : stem[0] == 'e' ? "eval" : "compare") << (same ? " identical " : " DIFFERS ");
  }
  return {pass, detail.str()};
}

// 12 ------------------------------------------------------------------------
Outcome format_robustness(const fs::path& dir) {
  const Fixture f = generate_fixture("cnn-2conv1fc", 12, {.batch_size = 16});
  const std::vector<Bytes> bases = {encode_model(f.model),
                                    encode_quantized_model(quantize_model(f.model, make_config(QuantMode::kSpiq, 4))),
                                    encode_quantized_model(quantize_model(f.model, make_config(QuantMode::kStatic, 6))),
                                    encode_batch(f.batch), encode_tensor(f.batch.inputs, "x")};
  const auto load_any = [](const fs::path& path) {
    const Bytes b = read_file(path);
    switch (container_kind(b)) {
      case ContainerKind::kModel: decode_model(b); break;
      case ContainerKind::kQuantizedModel: decode_quantized_model(b); break;
      case ContainerKind::kBatch: decode_batch(b); break;
      case ContainerKind::kTensor: decode_tensor(b); break;
    }
  };
  // Which loader to use is taken from the intact base, since mutations can break the header.
  const auto load_as = [](std::size_t base, const fs::path& path) {
    const Bytes b = read_file(path);
    switch (base) {
      case 0: decode_model(b); break;
      case 1:
      case 2: decode_quantized_model(b); break;
      case 3: decode_batch(b); break;
      default: decode_tensor(b); break;
    }
  };
  for (std::size_t i = 0; i < bases.size(); ++i) {
    write_file(dir / "base", bases[i]);
    load_any(dir / "base");
  }

  std::mt19937_64 rng(1212);
  std::size_t files = 0, crashes = 0, wrong_kind = 0, accepted_random = 0;
  std::map<std::string, std::set<FormatErrorKind>> kinds_by_class;
  const auto check = [&](const std::string& cls, std::size_t base, const Bytes& bytes,
                         std::optional<FormatErrorKind> expected) {
    const fs::path path = dir / ("fuzz_" + std::to_string(files++));
    write_file(path, bytes);
    try {
      load_as(base, path);
      if (expected) ++wrong_kind;
      else ++accepted_random;
    } catch (const FormatError& e) {
      kinds_by_class[cls].insert(e.kind());
      if (expected && e.kind() != *expected) ++wrong_kind;
    } catch (...) {
      ++crashes;
    }
    fs::remove(path);
  };

  for (int i = 0; i < 400; ++i) {  // truncated
    const std::size_t b = rng() % bases.size();
    const Bytes& src = bases[b];
    check("truncated", b, src.substr(0, rng() % src.size()), FormatErrorKind::kTruncated);
  }
  for (int i = 0; i < 200; ++i) {  // bad magic
    const std::size_t b = rng() % bases.size();
    Bytes m = bases[b];
    const std::size_t pos = rng() % 8;
    m[pos] = static_cast<char>(m[pos] ^ (1 + rng() % 255));
    check("bad-magic", b, m, FormatErrorKind::kBadMagic);
  }
  for (int i = 0; i < 400; ++i) {  // length-mismatched
    const std::size_t b = rng() % bases.size();
    const Bytes& src = bases[b];
    Bytes m;
    switch (i % 3) {
      case 0: m = src + Bytes(1 + rng() % 64, static_cast<char>(rng())); break;
      case 1: {
        auto j = manifest_of(src);
        j["blob_bytes"] = j["blob_bytes"].get<std::uint64_t>() - (1 + rng() % 16);
        m = with_manifest(src, j);
        break;
      }
      default: {
        auto j = manifest_of(src);
        nlohmann::json* blob = nullptr;
        if (j.contains("layers")) blob = &j["layers"][0][j["layers"][0].contains("q_weights") ? "q_weights" : "weights"];
        else blob = j.contains("inputs") ? &j["inputs"] : &j["tensor"];
        const auto len = (*blob)["length"].get<std::uint64_t>();
        (*blob)["length"] = rng() % 2 ? len + 4 * (1 + rng() % 8) : len - 4;
        m = with_manifest(src, j);
        break;
      }
    }
    check("length-mismatch", b, m, FormatErrorKind::kLengthMismatch);
  }
  for (int i = 0; i < 600; ++i) {  // random byte damage anywhere: must not crash
    const std::size_t b = rng() % bases.size();
    Bytes m = bases[b];
    const int flips = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < flips; ++k) {
      const std::size_t pos = rng() % std::min<std::size_t>(m.size(), 12 + rng() % 2000);
      m[pos] = static_cast<char>(rng());
    }
    check("random", b, m, std::nullopt);
  }

  const bool distinct = kinds_by_class["truncated"] == std::set{FormatErrorKind::kTruncated} &&
                        kinds_by_class["bad-magic"] == std::set{FormatErrorKind::kBadMagic} &&
                        kinds_by_class["length-mismatch"] == std::set{FormatErrorKind::kLengthMismatch};
  std::ostringstream detail;
  detail << files << " mutated files; " << crashes << " crashes, " << wrong_kind
         << " misclassified; truncated/bad-magic/length-mismatch map to distinct errors: "
         << (distinct ? "yes" : "no") << "; random damage: " << kinds_by_class["random"].size()
         << " error kinds, " << accepted_random << " still well-formed";
  return {crashes == 0 && wrong_kind == 0 && distinct && files >= 1000, detail.str()};
}

}  // namespace
}  // namespace spiq

int main() {
  using namespace spiq;
  const fs::path root = fs::temp_directory_path() / "spiq_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto sub = [&](const char* name) {
    fs::create_directories(root / name);
    return root / name;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"folding identity", folding_identity},
      {"scale ordering", scale_ordering},
      {"half-scale round-trip bound", half_scale_bound},
      {"input error dominance", input_error_dominance},
      {"output error dominance", output_error_dominance},
      {"per-neuron integer contract", neuron_contract},
      {"uniform-stats reduction", uniform_stats_reduction},
      {"accuracy trend", accuracy_trend},
      {"timing direction", timing_direction},
      {"lambda auto wiring", [&] { return lambda_auto_wiring(sub("lambda")); }},
      {"cli determinism", [&] { return cli_determinism(sub("determinism")); }},
      {"format robustness", [&] { return format_robustness(sub("fuzz")); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %-28s %s  (%.2fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  fs::remove_all(root);
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
