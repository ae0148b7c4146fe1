#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "stcsta/core.hpp"
#include "stcsta/energy.hpp"

namespace stcsta {

// Row-major N x T flags; 1 marks a cell that was not sampled.
struct CellMask {
    std::size_t n_streams = 0;
    std::size_t n_slots = 0;
    std::vector<std::uint8_t> missing;

    bool at(std::size_t s, std::size_t t) const { return missing[s * n_slots + t] != 0; }
    std::size_t count() const;
};

CellMask missing_mask(const ReadingMatrix& sink);

struct ErrorScore {
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t cells = 0;
};

struct QualityReport {
    std::map<Feature, std::optional<ErrorScore>> per_feature;  // absent when a feature has no masked cell
    std::optional<ErrorScore> overall;
};

// RMSE / MAE over masked cells only. Throws std::invalid_argument on any shape mismatch.
QualityReport quality(const ReadingMatrix& truth, const ReadingMatrix& completed, const CellMask& mask);

struct TrafficPct {
    double sampled_pct = 0.0;
    double transmitted_pct = 0.0;
};

struct TrafficReport {
    std::optional<TrafficPct> cluster;          // absent for zero rounds or zero streams
    std::map<int, TrafficPct> per_node;
};

// sampled_pct = 100 * sum(samples) / (n_streams * n_rounds * SR_max), likewise for tx_packets.
TrafficReport traffic_pcts(const std::vector<StreamId>& streams, const std::vector<ActivityCounters>& counters,
                           const RoundConfig& config, int n_rounds);

// Per-node totals of the per-stream counters, keyed by node index.
std::map<int, ActivityCounters> aggregate_by_node(const std::vector<StreamId>& streams,
                                                  const std::vector<ActivityCounters>& counters);

struct Census {
    std::size_t n_periods = 0;
    std::vector<std::vector<int>> counts;  // [stream][period]
    std::vector<double> mean_count;        // per stream, over periods
};

// For every period window of `period_slots` columns, counts the other streams whose
// correlation with the subject reaches `threshold`. A trailing partial window is ignored.
// Throws std::invalid_argument when threshold is outside (-1, 1], period_slots < 2, or the
// matrix has missing cells.
Census correlation_census(const ReadingMatrix& truth, double threshold, std::size_t period_slots);

}  // namespace stcsta
