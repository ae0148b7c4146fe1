#include "stcsta/app.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "stcsta/metrics.hpp"

namespace stcsta {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known)
{
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ConfigError(fmt::format("{}{}: unknown key", where.empty() ? "" : where + ".", key));
    }
}

const json* section(const json& root, const char* key)
{
    if (!root.contains(key))
        return nullptr;
    const json& s = root.at(key);
    if (!s.is_object())
        throw ConfigError(fmt::format("{}: object required", key));
    return &s;
}

template <typename T>
void read_into(const json& obj, const char* key, const std::string& where, T& dst)
{
    if (!obj.contains(key))
        return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("{}.{}: wrong type", where, key));
    }
}

json read_json_file(const fs::path& path, const char* what)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("{}: cannot open '{}'", what, path.string()));
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: '{}' is not valid JSON ({})", what, path.string(), e.what()));
    }
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_relative() && !base.empty() ? base / p : p; }

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << content;
    if (!out)
        throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

template <typename Fn>
std::string render(Fn&& fn)
{
    std::ostringstream os;
    fn(os);
    return std::move(os).str();
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir)
{
    if (!j.is_object())
        throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(j, "", {"dataset", "round", "scenarios", "modes", "energy", "em", "census"});
    RunConfig c;

    const json* ds = section(j, "dataset");
    if (!ds)
        throw ConfigError("dataset: required");
    reject_unknown_keys(*ds, "dataset", {"path", "synthetic", "features", "max_readings"});
    if (ds->contains("path") == ds->contains("synthetic"))
        throw ConfigError("dataset: exactly one of dataset.path and dataset.synthetic is required");
    if (ds->contains("path")) {
        std::string p;
        read_into(*ds, "path", "dataset", p);
        c.dataset_path = resolve(p, base_dir);
    } else {
        const json& syn = ds->at("synthetic");
        json spec_json = syn.is_string() ? read_json_file(resolve(syn.get<std::string>(), base_dir), "dataset.synthetic")
                                         : syn;
        try {
            c.synthetic = parse_synth_spec(spec_json);
        } catch (const SpecError& e) {
            throw ConfigError(fmt::format("dataset.synthetic.{}", e.what()));
        }
        if (!spec_json.contains("length"))
            c.synthetic->length = -1;  // sized below once round / scenarios are known
    }
    if (ds->contains("features")) {
        std::vector<std::string> names;
        read_into(*ds, "features", "dataset", names);
        if (names.empty())
            throw ConfigError("dataset.features: at least one feature required");
        c.features.clear();
        for (std::size_t k = 0; k < names.size(); ++k) {
            try {
                c.features.push_back(parse_feature(names[k]));
            } catch (const std::invalid_argument&) {
                throw ConfigError(fmt::format("dataset.features[{}]: unknown feature '{}'", k, names[k]));
            }
        }
        if (std::set<Feature>(c.features.begin(), c.features.end()).size() != c.features.size())
            throw ConfigError("dataset.features: duplicate feature");
    }
    read_into(*ds, "max_readings", "dataset", c.max_readings);

    if (const json* r = section(j, "round")) {
        reject_unknown_keys(*r, "round", {"period_s", "slots", "count"});
        read_into(*r, "period_s", "round", c.period_s);
        read_into(*r, "slots", "round", c.slots);
        read_into(*r, "count", "round", c.rounds);
    }
    if (!(c.period_s > 0.0))
        throw ConfigError("round.period_s: must be > 0");
    if (c.slots < 2)
        throw ConfigError("round.slots: must be >= 2");
    if (c.rounds < 0)
        throw ConfigError("round.count: must be >= 1, or 0 for all available rounds");

    if (const json* s = section(j, "scenarios")) {
        reject_unknown_keys(*s, "scenarios", {"decimation"});
        read_into(*s, "decimation", "scenarios", c.decimation);
    }
    if (c.decimation.empty())
        throw ConfigError("scenarios.decimation: at least one factor required");
    for (std::size_t k = 0; k < c.decimation.size(); ++k)
        if (c.decimation[k] < 1)
            throw ConfigError(fmt::format("scenarios.decimation[{}]: must be >= 1", k));
    if (std::set<int>(c.decimation.begin(), c.decimation.end()).size() != c.decimation.size())
        throw ConfigError("scenarios.decimation: duplicate factor");

    if (j.contains("modes")) {
        std::vector<std::string> names;
        read_into(j, "modes", "config", names);
        if (names.empty())
            throw ConfigError("modes: at least one mode required");
        c.modes.clear();
        for (std::size_t k = 0; k < names.size(); ++k) {
            try {
                c.modes.push_back(parse_mode(names[k]));
            } catch (const std::invalid_argument&) {
                throw ConfigError(fmt::format("modes[{}]: unknown mode '{}' (expected stcsta, exaggerated or fixed_max)",
                                              k, names[k]));
            }
        }
        if (std::set<SchedulingMode>(c.modes.begin(), c.modes.end()).size() != c.modes.size())
            throw ConfigError("modes: duplicate mode");
    }

    if (const json* e = section(j, "energy")) {
        reject_unknown_keys(*e, "energy", {"e_sample", "e_log_per_byte", "e_cpu_per_cycle", "e_elec", "e_amp",
                                           "packet_bits", "distance_m", "count_rx_energy"});
        read_into(*e, "e_sample", "energy", c.energy.e_sample);
        read_into(*e, "e_log_per_byte", "energy", c.energy.e_log_per_byte);
        read_into(*e, "e_cpu_per_cycle", "energy", c.energy.e_cpu_per_cycle);
        read_into(*e, "e_elec", "energy", c.energy.e_elec);
        read_into(*e, "e_amp", "energy", c.energy.e_amp);
        read_into(*e, "packet_bits", "energy", c.energy.packet_bits);
        read_into(*e, "distance_m", "energy", c.energy.distance_m);
        read_into(*e, "count_rx_energy", "energy", c.energy.count_rx_energy);
    }
    try {
        validate(c.energy);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("energy: {}", e.what()));
    }

    if (const json* em = section(j, "em")) {
        reject_unknown_keys(*em, "em", {"latent_dim", "max_iter", "tol", "window_rounds", "blocks"});
        auto& rc = c.reconstruction;
        read_into(*em, "latent_dim", "em", rc.em.latent_dim);
        read_into(*em, "max_iter", "em", rc.em.max_iterations);
        read_into(*em, "tol", "em", rc.em.loglik_rel_tolerance);
        read_into(*em, "window_rounds", "em", rc.window_rounds);
        std::string blocks = "joint";
        read_into(*em, "blocks", "em", blocks);
        if (blocks == "joint")
            rc.blocks = ReconstructionBlocks::Joint;
        else if (blocks == "per_feature")
            rc.blocks = ReconstructionBlocks::PerFeature;
        else
            throw ConfigError(fmt::format("em.blocks: unknown value '{}' (expected joint or per_feature)", blocks));
    }
    if (c.reconstruction.em.latent_dim < 0)
        throw ConfigError("em.latent_dim: must be >= 0");
    if (c.reconstruction.em.max_iterations < 1)
        throw ConfigError("em.max_iter: must be >= 1");
    if (!(c.reconstruction.em.loglik_rel_tolerance > 0.0))
        throw ConfigError("em.tol: must be > 0");
    if (c.reconstruction.window_rounds < 0)
        throw ConfigError("em.window_rounds: must be >= 0");
    c.reconstruction.slots_per_round = c.slots;

    if (const json* cs = section(j, "census")) {
        reject_unknown_keys(*cs, "census", {"threshold", "period_slots"});
        read_into(*cs, "threshold", "census", c.census_threshold);
        read_into(*cs, "period_slots", "census", c.census_period_slots);
    }
    if (!(c.census_threshold > -1.0 && c.census_threshold <= 1.0))
        throw ConfigError("census.threshold: must lie in (-1, 1]");
    if (c.census_period_slots != 0 && c.census_period_slots < 2)
        throw ConfigError("census.period_slots: must be 0 (one round) or >= 2");

    if (c.synthetic && c.synthetic->length < 0) {
        const int k_max = *std::max_element(c.decimation.begin(), c.decimation.end());
        c.synthetic->length = c.rounds > 0 ? c.rounds * c.slots * k_max
                                            : static_cast<int>(c.max_readings ? c.max_readings : 10000);
    }
    return c;
}

RunConfig load_run_config(const fs::path& path)
{
    return parse_run_config(read_json_file(path, "config"), path.parent_path());
}

std::string scenario_name(int decimation) { return fmt::format("k{}", decimation); }

RawDataset load_run_dataset(const RunConfig& config)
{
    RawDataset raw;
    if (config.dataset_path) {
        raw = load_dataset(*config.dataset_path, config.features, config.max_readings);
    } else {
        const RawDataset full = generate(*config.synthetic);
        for (std::size_t s = 0; s < full.n_streams(); ++s) {
            if (std::find(config.features.begin(), config.features.end(), full.streams[s].feature) ==
                config.features.end())
                continue;
            raw.streams.push_back(full.streams[s]);
            const std::size_t keep =
                config.max_readings ? std::min(config.max_readings, full.values[s].size()) : full.values[s].size();
            raw.timestamps.emplace_back(full.timestamps[s].begin(), full.timestamps[s].begin() + keep);
            raw.values.emplace_back(full.values[s].begin(), full.values[s].begin() + keep);
        }
        if (raw.streams.empty())
            throw ConfigError("dataset.features: none of the selected features is generated by dataset.synthetic");
    }
    if (raw.streams.empty())
        throw IngestError("dataset contains no streams");

    const std::size_t need =
        static_cast<std::size_t>(std::max(config.rounds, 1)) * static_cast<std::size_t>(config.slots);
    for (int k : config.decimation) {
        const std::size_t have = decimate(raw, k).min_length();
        if (have < need)
            throw IngestError(fmt::format("scenario {}: dataset gives {} readings per stream after decimation, "
                                          "at least {} are needed",
                                          scenario_name(k), have, need));
    }
    return raw;
}

ManifestRow run_cell(const RunConfig& config, const RawDataset& dataset, int decimation, SchedulingMode mode,
                     const fs::path& cell_dir)
{
    const RawDataset scenario = decimate(dataset, decimation);
    const int rounds = config.rounds > 0 ? config.rounds : static_cast<int>(scenario.min_length() / config.slots);
    const RoundConfig round{config.period_s * decimation, config.slots, rounds};
    const ReadingMatrix truth = to_reading_matrix(scenario, round);

    SimConfig sim_config;
    sim_config.round = round;
    sim_config.mode = mode;
    sim_config.energy = config.energy;
    sim_config.features = config.features;
    const SimResult sim = run_simulation(sim_config, truth);

    const CellMask mask = missing_mask(sim.sink_matrix);
    ReadingMatrix completed = sim.sink_matrix;
    std::vector<std::vector<double>> traces;
    if (mask.count() > 0) {
        auto rec = reconstruct_sink(sim.sink_matrix, config.reconstruction);
        completed = std::move(rec.completed);
        traces = std::move(rec.loglik_traces);
    }

    const auto& streams = truth.streams();
    const QualityReport q = quality(truth, completed, mask);
    const TrafficReport traffic = traffic_pcts(streams, sim.counters, round, rounds);
    const std::size_t period = config.census_period_slots ? static_cast<std::size_t>(config.census_period_slots)
                                                          : static_cast<std::size_t>(config.slots);
    const Census census = correlation_census(truth, config.census_threshold, period);

    ManifestRow row;
    row.scenario = scenario_name(decimation);
    row.mode = std::string(to_string(mode));
    row.rounds = rounds;
    row.slots_per_round = config.slots;
    row.n_streams = streams.size();
    if (traffic.cluster) {
        row.sampled_pct = traffic.cluster->sampled_pct;
        row.transmitted_pct = traffic.cluster->transmitted_pct;
    }
    for (const auto& [node, c] : aggregate_by_node(streams, sim.counters))
        row.total_energy_J += node_energy(c, config.energy).e_total;

    fs::create_directories(cell_dir);
    write_file(cell_dir / "manifest.csv", render([&](std::ostream& os) {
                   write_manifest_header(os);
                   write_manifest_row(os, row);
               }));
    write_file(cell_dir / "schedule.csv",
               render([&](std::ostream& os) { write_schedule_csv(os, streams, sim.schedules); }));
    write_file(cell_dir / "energy.csv",
               render([&](std::ostream& os) { write_energy_csv(os, streams, sim.counters, config.energy); }));
    write_file(cell_dir / "quality.csv",
               render([&](std::ostream& os) { write_quality_csv(os, row.scenario, row.mode, q); }));
    write_file(cell_dir / "census.csv", render([&](std::ostream& os) { write_census_csv(os, streams, census); }));
    write_file(cell_dir / "truth.csv", render([&](std::ostream& os) { write_matrix_csv(os, truth, nullptr); }));
    write_file(cell_dir / "completed.csv",
               render([&](std::ostream& os) { write_matrix_csv(os, completed, &mask); }));
    write_file(cell_dir / "loglik.csv", render([&](std::ostream& os) {
                   os << "job,iteration,loglik\n";
                   for (std::size_t jb = 0; jb < traces.size(); ++jb)
                       for (std::size_t it = 0; it < traces[jb].size(); ++it)
                           os << fmt::format("{},{},{}\n", jb, it + 1, traces[jb][it]);
               }));
    return row;
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir, int jobs, std::ostream& log)
{
    RunConfig config;
    RawDataset dataset;
    try {
        config = load_run_config(config_path);
        dataset = load_run_dataset(config);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return 2;
    } catch (const SpecError& e) {
        log << "config error: dataset.synthetic." << e.what() << '\n';
        return 2;
    } catch (const IngestError& e) {
        log << "input error: " << e.what() << '\n';
        return 2;
    }
    if (jobs < 1) {
        log << "config error: --jobs must be >= 1\n";
        return 2;
    }
    for (const auto& r : dataset.rejections)
        log << fmt::format("warning: dataset line {} skipped: {}\n", r.line, r.reason);

    std::vector<CellResult> cells;
    for (int k : config.decimation)
        for (SchedulingMode m : config.modes)
            cells.push_back({scenario_name(k), m, std::nullopt, {}});

    try {
        fs::create_directories(out_dir);
    } catch (const fs::filesystem_error& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            auto& cell = cells[i];
            const int k = config.decimation[i / config.modes.size()];
            const fs::path dir = out_dir / cell.scenario / std::string(to_string(cell.mode));
            try {
                fs::remove(dir / "FAILED");
                cell.manifest = run_cell(config, dataset, k, cell.mode, dir);
            } catch (const std::exception& e) {
                cell.error = e.what();
                try {
                    fs::create_directories(dir);
                    write_file(dir / "FAILED", cell.error + '\n');
                } catch (const std::exception&) {
                }
            }
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    int failures = 0;
    std::ostringstream manifest;
    write_manifest_header(manifest);
    for (const auto& cell : cells) {
        if (cell.manifest) {
            write_manifest_row(manifest, *cell.manifest);
            log << fmt::format("{}/{}: sampled {:.2f}%, energy {:.6g} J\n", cell.scenario, to_string(cell.mode),
                               cell.manifest->sampled_pct, cell.manifest->total_energy_J);
        } else {
            ++failures;
            log << fmt::format("{}/{}: FAILED: {}\n", cell.scenario, to_string(cell.mode), cell.error);
        }
    }
    try {
        write_file(out_dir / "manifest.csv", manifest.str());
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
    return failures ? 1 : 0;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_file, std::optional<std::uint64_t> seed,
              std::ostream& log)
{
    SynthSpec spec;
    try {
        spec = parse_synth_spec(read_json_file(spec_path, "spec"));
        if (seed)
            spec.seed = *seed;
    } catch (const ConfigError& e) {
        log << "spec error: " << e.what() << '\n';
        return 2;
    } catch (const SpecError& e) {
        log << "spec error: " << e.what() << '\n';
        return 2;
    }
    try {
        const RawDataset ds = generate(spec);
        if (out_file.has_parent_path())
            fs::create_directories(out_file.parent_path());
        write_file(out_file, render([&](std::ostream& os) { write_canonical_csv(os, ds); }));
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace stcsta
