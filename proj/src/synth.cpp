#include "stcsta/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace stcsta {

namespace {

using nlohmann::json;

GeneratorKind parse_kind(const std::string& s, const std::string& field)
{
    if (s == "sinusoid")
        return GeneratorKind::Sinusoid;
    if (s == "random_walk")
        return GeneratorKind::RandomWalk;
    if (s == "white_noise")
        return GeneratorKind::WhiteNoise;
    throw SpecError(fmt::format("{}: unknown generator '{}'", field, s));
}

template <typename T>
T read(const json& obj, const char* key, T fallback, const std::string& where)
{
    if (!obj.contains(key))
        return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw SpecError(fmt::format("{}.{}: wrong type", where, key));
    }
}

}  // namespace

SynthSpec parse_synth_spec(const json& j)
{
    if (!j.is_object())
        throw SpecError("synthetic spec must be a JSON object");
    SynthSpec spec;
    spec.nodes = read<int>(j, "nodes", spec.nodes, "spec");
    spec.length = read<int>(j, "length", spec.length, "spec");
    spec.step_s = read<double>(j, "step_s", spec.step_s, "spec");
    spec.t0 = read<std::int64_t>(j, "t0", spec.t0, "spec");
    spec.seed = read<std::uint64_t>(j, "seed", spec.seed, "spec");

    if (!j.contains("features") || !j.at("features").is_object())
        throw SpecError("features: object required");
    for (const auto& [name, gen] : j.at("features").items()) {
        const std::string where = "features." + name;
        Feature f{};
        try {
            f = parse_feature(name);
        } catch (const std::invalid_argument&) {
            throw SpecError(fmt::format("{}: unknown feature", where));
        }
        if (!gen.is_object())
            throw SpecError(fmt::format("{}: object required", where));
        FeatureGenerator g;
        g.kind = parse_kind(read<std::string>(gen, "generator", "sinusoid", where), where + ".generator");
        g.offset = read<double>(gen, "offset", g.offset, where);
        g.amplitude = read<double>(gen, "amplitude", g.amplitude, where);
        g.period_steps = read<double>(gen, "period_steps", g.period_steps, where);
        g.phase_jitter = read<double>(gen, "phase_jitter", g.phase_jitter, where);
        g.drift_std = read<double>(gen, "drift_std", g.drift_std, where);
        g.shared = read<double>(gen, "shared", g.shared, where);
        g.noise_std = read<double>(gen, "noise_std", g.noise_std, where);
        spec.features[f] = g;
    }

    if (j.contains("mixing")) {
        if (!j.at("mixing").is_array())
            throw SpecError("mixing: array required");
        std::size_t k = 0;
        for (const auto& m : j.at("mixing")) {
            const std::string where = fmt::format("mixing[{}]", k++);
            if (!m.is_object())
                throw SpecError(fmt::format("{}: object required", where));
            MixingWeight w;
            try {
                w.feature = parse_feature(read<std::string>(m, "feature", "", where));
            } catch (const std::invalid_argument&) {
                throw SpecError(fmt::format("{}.feature: unknown feature", where));
            }
            w.source = read<int>(m, "source", -1, where);
            w.target = read<int>(m, "target", -1, where);
            w.weight = read<double>(m, "weight", 0.0, where);
            spec.mixing.push_back(w);
        }
    }
    validate(spec);
    return spec;
}

void validate(const SynthSpec& spec)
{
    if (spec.nodes < 1)
        throw SpecError("nodes: must be >= 1");
    if (spec.length < 1)
        throw SpecError("length: must be >= 1");
    if (!(spec.step_s > 0.0))
        throw SpecError("step_s: must be > 0");
    if (spec.features.empty())
        throw SpecError("features: at least one feature required");
    for (const auto& [f, g] : spec.features) {
        const std::string where = fmt::format("features.{}", to_string(f));
        if (g.kind == GeneratorKind::Sinusoid && !(g.period_steps > 0.0))
            throw SpecError(where + ".period_steps: must be > 0");
        if (!(g.shared >= 0.0 && g.shared <= 1.0))
            throw SpecError(where + ".shared: must lie in [0, 1]");
        if (!(g.noise_std >= 0.0) || !(g.drift_std >= 0.0) || !(g.phase_jitter >= 0.0))
            throw SpecError(where + ": noise_std, drift_std and phase_jitter must be >= 0");
    }
    for (std::size_t k = 0; k < spec.mixing.size(); ++k) {
        const auto& m = spec.mixing[k];
        if (m.source < 0 || m.source >= spec.nodes || m.target < 0 || m.target >= spec.nodes)
            throw SpecError(fmt::format("mixing[{}]: source/target must be node indices in [0, {})", k, spec.nodes));
        if (!(m.weight >= 0.0 && m.weight <= 1.0))
            throw SpecError(fmt::format("mixing[{}].weight: must lie in [0, 1]", k));
        if (!spec.features.contains(m.feature))
            throw SpecError(fmt::format("mixing[{}].feature: not generated by this spec", k));
    }
}

SynthSpec default_synth_spec(int nodes, int length, std::uint64_t seed)
{
    SynthSpec s;
    s.nodes = nodes;
    s.length = length;
    s.seed = seed;
    // One day = 720 native 2-minute steps.
    s.features[Feature::AmbientTemp] = {GeneratorKind::Sinusoid, 4.0, 6.0, 720.0, 0.35, 0.02, 0.7, 0.25};
    s.features[Feature::SurfaceTemp] = {GeneratorKind::Sinusoid, 6.0, 9.0, 720.0, 0.45, 0.03, 0.6, 0.4};
    s.features[Feature::RelHumidity] = {GeneratorKind::Sinusoid, 70.0, 14.0, 720.0, 0.5, 0.05, 0.5, 1.5};
    s.features[Feature::WindSpeed] = {GeneratorKind::Sinusoid, 5.0, 2.0, 720.0, 1.0, 0.05, 0.2, 3.0};
    if (nodes >= 4) {
        s.mixing.push_back({Feature::AmbientTemp, 0, 1, 0.9});
        s.mixing.push_back({Feature::SurfaceTemp, 2, 3, 0.8});
    }
    return s;
}

RawDataset generate(const SynthSpec& spec)
{
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto len = static_cast<std::size_t>(spec.length);
    const auto nodes = static_cast<std::size_t>(spec.nodes);

    std::vector<double> ts(len);
    for (std::size_t k = 0; k < len; ++k)
        ts[k] = static_cast<double>(spec.t0) + spec.step_s * static_cast<double>(k);

    // pre-noise signals, [feature][node][t]
    std::map<Feature, std::vector<std::vector<double>>> pre;
    for (const auto& [feature, g] : spec.features) {
        auto signal = [&](double phase) {
            std::vector<double> x(len);
            double walk = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                switch (g.kind) {
                case GeneratorKind::Sinusoid:
                    x[k] = std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / g.period_steps + phase);
                    break;
                case GeneratorKind::RandomWalk:
                    walk += normal(rng);
                    x[k] = walk;
                    break;
                case GeneratorKind::WhiteNoise:
                    x[k] = normal(rng);
                    break;
                }
            }
            return x;
        };

        const std::vector<double> common = signal(0.0);
        auto& rows = pre[feature];
        rows.resize(nodes);
        std::uniform_real_distribution<double> phase_dist(-g.phase_jitter, g.phase_jitter);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double phase = g.phase_jitter > 0.0 ? phase_dist(rng) : 0.0;
            std::vector<double> own = signal(phase);
            double drift = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                if (g.drift_std > 0.0) {
                    drift += g.drift_std * normal(rng);
                    own[k] += drift;
                }
                own[k] = g.shared * common[k] + (1.0 - g.shared) * own[k];
            }
            rows[i] = std::move(own);
        }
    }

    // Mixing reads the unmixed sources.
    const auto unmixed = pre;
    for (const auto& m : spec.mixing) {
        auto& tgt = pre[m.feature][static_cast<std::size_t>(m.target)];
        const auto& src = unmixed.at(m.feature)[static_cast<std::size_t>(m.source)];
        for (std::size_t k = 0; k < len; ++k)
            tgt[k] = (1.0 - m.weight) * tgt[k] + m.weight * src[k];
    }

    RawDataset out;
    for (std::size_t i = 0; i < nodes; ++i) {
        for (const auto& [feature, g] : spec.features) {
            const auto& p = pre[feature][i];
            std::vector<double> v(len);
            for (std::size_t k = 0; k < len; ++k) {
                const double noise = g.noise_std > 0.0 ? g.noise_std * normal(rng) : 0.0;
                v[k] = g.offset + g.amplitude * p[k] + noise;
            }
            out.streams.push_back({static_cast<int>(i), feature});
            out.timestamps.push_back(ts);
            out.values.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace stcsta
