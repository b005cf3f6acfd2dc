#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spiq/model_io.hpp"

namespace spiq {

struct FixtureOptions {
  std::size_t batch_size = 1024;
  /// Every BN layer gets one (mean, variance) shared by all its channels.
  bool uniform_bn_stats = false;
};

struct Fixture {
  ModelGraph model;
  Batch batch;
};

/// Built-in templates: "mlp-3x64", "cnn-2conv1fc", "fc-16x4".
std::vector<std::string> fixture_templates();

/// Deterministic model + evaluation batch for a template and seed.
///
/// Declared BN stats (the layer-input moments) are drawn per channel with
/// heterogeneous spreads. The first BN's running moments equal its declared
/// stats and the batch is Gaussian with those moments; deeper BN running
/// moments are measured on a separate seeded calibration draw.
///
/// The evaluation batch drops Gaussian draws whose top-2 reference logit
/// margin is in the lowest quartile of a pilot draw (a random network has
/// far more near-ties than a trained one), then rescales each channel so
/// the batch moments equal the declared stats exactly. All stored
/// values are float32-representable, so files round-trip bit-exactly.
/// Labels are the argmax of the full-precision model on the batch.
Fixture generate_fixture(std::string_view name, std::uint64_t seed,
                         const FixtureOptions& options = {});

}  // namespace spiq
