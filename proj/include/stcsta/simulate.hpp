#pragma once

// Round-based protocol: nodes sample per schedule and transmit every sample, the cluster
// head recomputes schedules at each round end, the sink accumulates the NaN-marked matrix.

#include <cstdint>
#include <string_view>
#include <vector>

#include "stcsta/core.hpp"
#include "stcsta/energy.hpp"

namespace stcsta {

enum class SchedulingMode { Stcsta, Exaggerated, FixedMax };

std::string_view to_string(SchedulingMode mode);
// Throws std::invalid_argument for an unknown name.
SchedulingMode parse_mode(std::string_view name);

struct SimConfig {
    RoundConfig round;
    SchedulingMode mode = SchedulingMode::Stcsta;
    EnergyParams energy;
    std::uint64_t seed = 0;
    std::vector<Feature> features{std::begin(kAllFeatures), std::end(kAllFeatures)};
};

struct RoundOutcome {
    ReadingMatrix sink_slice;
    std::vector<ActivityCounters> deltas;  // per stream
};

// Stream s samples slots 0, g, 2g, ... with (count, g) from slots_for_reduction; every
// sample is transmitted immediately. Throws std::invalid_argument when the schedule size
// does not match the slice.
RoundOutcome run_round(const ReadingMatrix& truth_slice, const SamplingSchedule& schedule,
                       const EnergyParams& energy);

// Schedule the cluster head derives from one received round (forward-filled internally).
// Fewer than two streams yields the full-rate schedule.
SamplingSchedule ch_schedule(const ReadingMatrix& received_slice, SchedulingMode mode, int sr_max);

struct SimResult {
    ReadingMatrix sink_matrix;
    ReadingMatrix truth_matrix;
    std::vector<ActivityCounters> counters;  // per stream
    // schedules[r] is computed at the end of round r (0-based) and drives round r + 1.
    std::vector<SamplingSchedule> schedules;
    int sr_max = 0;

    // Schedule applied during round r (full rate for r == 0).
    SamplingSchedule applied(std::size_t round) const;
};

// Throws std::invalid_argument when `truth` is not dense, round-aligned and sized
// rounds * slots_per_round.
SimResult run_simulation(const SimConfig& config, const ReadingMatrix& truth);

}  // namespace stcsta
