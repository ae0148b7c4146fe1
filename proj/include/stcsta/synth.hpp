#pragma once

// Deterministic synthetic multi-node datasets in the canonical ingest schema.
//
// For feature f and node i:
//   own_i(t)  = generator signal (per-node phase or draw) + optional random-walk drift
//   pre_i(t)  = shared * common(t) + (1 - shared) * own_i(t)
//   pre_tgt   = (1 - w) * pre_tgt + w * pre_src          for each mixing entry
//   value     = offset + amplitude * pre_i(t) + N(0, noise_std)
//
// A mixing weight of 1 makes two streams identical before measurement noise.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stcsta/core.hpp"
#include "stcsta/ingest.hpp"

namespace stcsta {

class SpecError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class GeneratorKind { Sinusoid, RandomWalk, WhiteNoise };

struct FeatureGenerator {
    GeneratorKind kind = GeneratorKind::Sinusoid;
    double offset = 0.0;
    double amplitude = 1.0;
    double period_steps = 720.0;  // sinusoid only
    double phase_jitter = 0.0;    // radians, per-node phase drawn from U(-j, j)
    double drift_std = 0.0;       // per-step std of an extra random walk in own_i
    double shared = 0.0;          // weight of the cluster-wide common component, [0, 1]
    double noise_std = 0.0;       // measurement noise, in feature units
};

struct MixingWeight {
    Feature feature = Feature::AmbientTemp;
    int source = 0;
    int target = 0;
    double weight = 0.0;  // [0, 1]
};

struct SynthSpec {
    int nodes = 4;
    int length = 2000;
    double step_s = 120.0;
    std::int64_t t0 = 0;
    std::uint64_t seed = 0;
    std::map<Feature, FeatureGenerator> features;
    std::vector<MixingWeight> mixing;
};

// Throws SpecError naming the offending field.
SynthSpec parse_synth_spec(const nlohmann::json& j);
void validate(const SynthSpec& spec);

// Alpine-deployment-like defaults: smooth, spatially shared temperatures, noisier
// humidity, weakly structured wind.
SynthSpec default_synth_spec(int nodes, int length, std::uint64_t seed);

RawDataset generate(const SynthSpec& spec);

}  // namespace stcsta
