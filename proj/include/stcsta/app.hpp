#pragma once

// Config-driven sweep over decimation scenarios x scheduling modes, and the synthetic
// dataset command. Both return process exit codes: 0 success, 1 runtime failure,
// 2 invalid configuration or input precondition.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stcsta/core.hpp"
#include "stcsta/ingest.hpp"
#include "stcsta/reconstruct.hpp"
#include "stcsta/report.hpp"
#include "stcsta/simulate.hpp"
#include "stcsta/synth.hpp"

namespace stcsta {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // Exactly one of path / synthetic.
    std::optional<std::filesystem::path> dataset_path;
    std::optional<SynthSpec> synthetic;
    std::vector<Feature> features{std::begin(kAllFeatures), std::end(kAllFeatures)};
    std::size_t max_readings = 10000;  // per node, 0 = unlimited

    double period_s = 6000.0;
    int slots = 50;
    int rounds = 0;  // 0 = as many whole rounds as each decimated scenario provides

    std::vector<int> decimation{1, 5, 10};
    std::vector<SchedulingMode> modes{SchedulingMode::Stcsta, SchedulingMode::Exaggerated, SchedulingMode::FixedMax};

    EnergyParams energy;
    ReconstructConfig reconstruction;  // slots_per_round is overwritten from `slots`

    double census_threshold = 0.5;
    int census_period_slots = 0;  // 0 = one round
};

// Relative dataset / spec paths resolve against `base_dir`. Throws ConfigError naming the field.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::string scenario_name(int decimation);

struct CellResult {
    std::string scenario;
    SchedulingMode mode = SchedulingMode::Stcsta;
    std::optional<ManifestRow> manifest;  // absent on failure
    std::string error;
};

// Loads or generates the dataset and checks every scenario has rounds x slots readings.
// Throws ConfigError / IngestError / SpecError on bad input.
RawDataset load_run_dataset(const RunConfig& config);

// Runs one scenario x mode cell and writes its artifacts under `cell_dir`.
// Throws on runtime failure.
ManifestRow run_cell(const RunConfig& config, const RawDataset& dataset, int decimation, SchedulingMode mode,
                     const std::filesystem::path& cell_dir);

// Full sweep; diagnostics go to `log`.
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, int jobs,
            std::ostream& log);
int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_file,
              std::optional<std::uint64_t> seed, std::ostream& log);

}  // namespace stcsta
