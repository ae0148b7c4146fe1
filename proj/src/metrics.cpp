#include "stcsta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "stcsta/scheduler.hpp"

namespace stcsta {

std::size_t CellMask::count() const
{
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

CellMask missing_mask(const ReadingMatrix& sink)
{
    CellMask mask{sink.n_streams(), sink.n_slots(), {}};
    mask.missing.reserve(sink.values().size());
    for (double v : sink.values())
        mask.missing.push_back(is_present(v) ? 0 : 1);
    return mask;
}

namespace {

struct Accumulator {
    double sq = 0.0;
    double abs = 0.0;
    std::size_t n = 0;

    void add(double err)
    {
        sq += err * err;
        abs += std::abs(err);
        ++n;
    }

    std::optional<ErrorScore> score() const
    {
        if (n == 0)
            return std::nullopt;
        const auto cells = static_cast<double>(n);
        return ErrorScore{std::sqrt(sq / cells), abs / cells, n};
    }
};

}  // namespace

QualityReport quality(const ReadingMatrix& truth, const ReadingMatrix& completed, const CellMask& mask)
{
    if (truth.n_streams() != completed.n_streams() || truth.n_slots() != completed.n_slots() ||
        mask.n_streams != truth.n_streams() || mask.n_slots != truth.n_slots() ||
        mask.missing.size() != truth.values().size())
        throw std::invalid_argument("quality: truth, completed and mask dimensions differ");

    std::map<Feature, Accumulator> by_feature;
    Accumulator all;
    for (std::size_t s = 0; s < truth.n_streams(); ++s) {
        auto& acc = by_feature[truth.streams()[s].feature];
        for (std::size_t t = 0; t < truth.n_slots(); ++t) {
            if (!mask.at(s, t))
                continue;
            const double err = completed.at(s, t) - truth.at(s, t);
            acc.add(err);
            all.add(err);
        }
    }
    QualityReport report;
    for (const auto& [feature, acc] : by_feature)
        report.per_feature[feature] = acc.score();
    report.overall = all.score();
    return report;
}

std::map<int, ActivityCounters> aggregate_by_node(const std::vector<StreamId>& streams,
                                                  const std::vector<ActivityCounters>& counters)
{
    if (streams.size() != counters.size())
        throw std::invalid_argument("aggregate_by_node: one counter set per stream required");
    std::map<int, ActivityCounters> out;
    for (std::size_t s = 0; s < streams.size(); ++s)
        out[streams[s].node_index] += counters[s];
    return out;
}

TrafficReport traffic_pcts(const std::vector<StreamId>& streams, const std::vector<ActivityCounters>& counters,
                           const RoundConfig& config, int n_rounds)
{
    if (streams.size() != counters.size())
        throw std::invalid_argument("traffic_pcts: one counter set per stream required");
    TrafficReport report;
    if (n_rounds <= 0 || streams.empty() || config.sr_max() <= 0)
        return report;

    const double per_stream = static_cast<double>(n_rounds) * static_cast<double>(config.sr_max());
    std::map<int, std::pair<std::int64_t, std::int64_t>> node_totals;  // samples, tx
    std::map<int, std::size_t> node_streams;
    std::int64_t samples = 0;
    std::int64_t tx = 0;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        samples += counters[s].samples;
        tx += counters[s].tx_packets;
        auto& nt = node_totals[streams[s].node_index];
        nt.first += counters[s].samples;
        nt.second += counters[s].tx_packets;
        ++node_streams[streams[s].node_index];
    }
    const double cap = per_stream * static_cast<double>(streams.size());
    report.cluster = TrafficPct{100.0 * static_cast<double>(samples) / cap, 100.0 * static_cast<double>(tx) / cap};
    for (const auto& [node, totals] : node_totals) {
        const double node_cap = per_stream * static_cast<double>(node_streams[node]);
        report.per_node[node] = TrafficPct{100.0 * static_cast<double>(totals.first) / node_cap,
                                           100.0 * static_cast<double>(totals.second) / node_cap};
    }
    return report;
}

Census correlation_census(const ReadingMatrix& truth, double threshold, std::size_t period_slots)
{
    if (!(threshold > -1.0 && threshold <= 1.0))
        throw std::invalid_argument(fmt::format("census threshold {} outside (-1, 1]", threshold));
    if (period_slots < 2)
        throw std::invalid_argument("census period must span at least two slots");
    if (truth.count_missing() != 0)
        throw std::invalid_argument("census needs a dense matrix");

    const std::size_t n = truth.n_streams();
    Census census;
    census.n_periods = truth.n_slots() / period_slots;
    census.counts.assign(n, std::vector<int>(census.n_periods, 0));
    for (std::size_t p = 0; p < census.n_periods; ++p) {
        const auto corr = correlation_matrix(truth.slice(p * period_slots, period_slots));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (corr.at(i, j) >= threshold) {
                    ++census.counts[i][p];
                    ++census.counts[j][p];
                }
    }
    census.mean_count.assign(n, 0.0);
    for (std::size_t i = 0; i < n && census.n_periods > 0; ++i) {
        double sum = 0.0;
        for (int c : census.counts[i])
            sum += c;
        census.mean_count[i] = sum / static_cast<double>(census.n_periods);
    }
    return census;
}

}  // namespace stcsta
