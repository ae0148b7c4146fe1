#pragma once

// Shared data model: streams, rounds, reading matrices, schedules.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stcsta {

enum class Feature : std::uint8_t { AmbientTemp, SurfaceTemp, RelHumidity, WindSpeed };

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr Feature kAllFeatures[kFeatureCount] = {
    Feature::AmbientTemp, Feature::SurfaceTemp, Feature::RelHumidity, Feature::WindSpeed};

std::string_view to_string(Feature f);
// Throws std::invalid_argument for an unknown name.
Feature parse_feature(std::string_view name);
std::string_view unit_of(Feature f);

struct StreamId {
    int node_index = 0;
    Feature feature = Feature::AmbientTemp;

    friend bool operator==(const StreamId&, const StreamId&) = default;
    friend auto operator<=>(const StreamId&, const StreamId&) = default;
};

// "<node>:<feature>", e.g. "3:ambient_temp".
std::string to_string(const StreamId& id);

struct RoundConfig {
    double period_seconds = 6000.0;
    int slots_per_round = 50;  // SR_max
    int rounds = 1;

    int sr_max() const { return slots_per_round; }
    double slot_seconds() const { return period_seconds / slots_per_round; }
    std::size_t total_slots() const {
        return static_cast<std::size_t>(slots_per_round) * static_cast<std::size_t>(rounds);
    }
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_present(double v) { return v == v; }

// N streams x T slots, row-major. NaN marks a non-sampled slot.
class ReadingMatrix {
  public:
    ReadingMatrix() = default;
    // Throws std::invalid_argument when values.size() != streams.size() * timestamps.size().
    ReadingMatrix(std::vector<StreamId> streams, std::vector<double> timestamps,
                  std::vector<double> values);
    // Dense NaN-filled matrix with the given shape.
    ReadingMatrix(std::vector<StreamId> streams, std::vector<double> timestamps);

    std::size_t n_streams() const { return streams_.size(); }
    std::size_t n_slots() const { return timestamps_.size(); }

    const std::vector<StreamId>& streams() const { return streams_; }
    const std::vector<double>& timestamps() const { return timestamps_; }
    const std::vector<double>& values() const { return values_; }

    double at(std::size_t stream, std::size_t slot) const { return values_[stream * n_slots() + slot]; }
    double& at(std::size_t stream, std::size_t slot) { return values_[stream * n_slots() + slot]; }

    std::span<const double> row(std::size_t stream) const {
        return {values_.data() + stream * n_slots(), n_slots()};
    }
    std::span<double> row(std::size_t stream) { return {values_.data() + stream * n_slots(), n_slots()}; }

    // Columns [first, first + count) as a new matrix.
    ReadingMatrix slice(std::size_t first, std::size_t count) const;
    // Rows selected by index, in the given order.
    ReadingMatrix select_rows(std::span<const std::size_t> rows) const;

    std::size_t count_missing() const;

    friend bool operator==(const ReadingMatrix&, const ReadingMatrix&);

  private:
    std::vector<StreamId> streams_;
    std::vector<double> timestamps_;
    std::vector<double> values_;
};

// Strictly-increasing timestamps t0, t0 + step, ...
std::vector<double> regular_timestamps(double t0, double step, std::size_t count);

struct Violation {
    enum class Kind { Dimension, MissingFirstOfRound, NonMonotoneTimestamp, IrregularStep, DuplicateStream };
    Kind kind;
    std::optional<std::size_t> stream;
    std::optional<std::size_t> slot;
    std::string message;
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Collects every invariant violation; never throws.
ValidationResult validate_matrix(const ReadingMatrix& matrix, const RoundConfig& config);

// Reduction percentage held in fixed point (1e-6 %), so that complements are exact.
class ReductionPct {
  public:
    static constexpr std::int64_t kUnitsPerPercent = 1'000'000;
    static constexpr std::int64_t kFull = 100 * kUnitsPerPercent;

    constexpr ReductionPct() = default;

    static constexpr ReductionPct from_units(std::int64_t units) { return ReductionPct(units); }
    // Throws std::domain_error outside [0, 100].
    static ReductionPct from_percent(double pct);
    // rho * 100 clamped to [0, 100].
    static ReductionPct from_correlation(double rho);

    constexpr std::int64_t units() const { return units_; }
    double percent() const { return static_cast<double>(units_) / kUnitsPerPercent; }
    constexpr ReductionPct complement() const { return ReductionPct(kFull - units_); }

    friend constexpr bool operator==(ReductionPct, ReductionPct) = default;
    friend constexpr auto operator<=>(ReductionPct, ReductionPct) = default;

  private:
    constexpr explicit ReductionPct(std::int64_t units) : units_(units) {}
    std::int64_t units_ = 0;
};

std::string format_percent(ReductionPct r);

struct SlotPlan {
    int samples = 1;
    int gap = 1;
};

// samples = max(1, floor(sr_max * (1 - r/100))), gap = floor(sr_max / samples).
// Sampled slots are 0, gap, 2*gap, ... (samples of them).
SlotPlan slots_for_reduction(ReductionPct reduction, int sr_max);
// Throws std::domain_error when reduction_pct is outside [0, 100] or sr_max < 1.
SlotPlan slots_for_reduction(double reduction_pct, int sr_max);

struct CorrelationRow {
    std::size_t stream = 0;
    std::size_t best_match = 0;
    double rho = 0.0;
};

struct CorrelationTable {
    std::vector<CorrelationRow> rows;  // rows[i].stream == i
};

struct SamplingSchedule {
    std::vector<ReductionPct> reductions;
    std::vector<int> samples_next_round;

    SamplingSchedule() = default;
    SamplingSchedule(std::vector<ReductionPct> reductions, int sr_max);

    static SamplingSchedule full_rate(std::size_t n_streams, int sr_max);
    std::size_t size() const { return reductions.size(); }
};

struct EnergyParams {
    double e_sample = 0.5e-6;        // J per sample
    double e_log_per_byte = 0.1e-6;  // J per byte written
    double e_cpu_per_cycle = 1e-9;   // J per CPU cycle
    double e_elec = 50e-9;           // J per bit, radio electronics
    double e_amp = 100e-12;          // J per bit per m^2, amplifier
    int packet_bits = 512;
    double distance_m = 50.0;
    bool count_rx_energy = false;
};

}  // namespace stcsta
