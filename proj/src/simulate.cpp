#include "stcsta/simulate.hpp"

#include <stdexcept>

#include <fmt/format.h>

#include "stcsta/scheduler.hpp"

namespace stcsta {

std::string_view to_string(SchedulingMode mode)
{
    switch (mode) {
    case SchedulingMode::Stcsta:
        return "stcsta";
    case SchedulingMode::Exaggerated:
        return "exaggerated";
    case SchedulingMode::FixedMax:
        return "fixed_max";
    }
    return "unknown";
}

SchedulingMode parse_mode(std::string_view name)
{
    for (auto mode : {SchedulingMode::Stcsta, SchedulingMode::Exaggerated, SchedulingMode::FixedMax}) {
        if (to_string(mode) == name)
            return mode;
    }
    throw std::invalid_argument(fmt::format("unknown scheduling mode '{}'", name));
}

RoundOutcome run_round(const ReadingMatrix& truth_slice, const SamplingSchedule& schedule, const EnergyParams& energy)
{
    const std::size_t n = truth_slice.n_streams();
    if (schedule.size() != n)
        throw std::invalid_argument(
            fmt::format("schedule covers {} streams, round slice has {}", schedule.size(), n));
    const int sr_max = static_cast<int>(truth_slice.n_slots());

    RoundOutcome out{ReadingMatrix(truth_slice.streams(), truth_slice.timestamps()), std::vector<ActivityCounters>(n)};
    for (std::size_t s = 0; s < n; ++s) {
        const SlotPlan plan = slots_for_reduction(schedule.reductions[s], sr_max);
        auto& delta = out.deltas[s];
        delta.tx_distance_m = energy.distance_m;
        for (int k = 0; k < plan.samples; ++k) {
            const auto slot = static_cast<std::size_t>(k) * static_cast<std::size_t>(plan.gap);
            out.sink_slice.at(s, slot) = truth_slice.at(s, slot);
            ++delta.samples;
            ++delta.tx_packets;
        }
    }
    return out;
}

SamplingSchedule ch_schedule(const ReadingMatrix& received_slice, SchedulingMode mode, int sr_max)
{
    const std::size_t n = received_slice.n_streams();
    if (mode == SchedulingMode::FixedMax || n < 2)
        return SamplingSchedule::full_rate(n, sr_max);

    const auto table = best_match_table(correlation_matrix(forward_fill(received_slice)));
    if (mode == SchedulingMode::Exaggerated)
        return exaggerated_allocate(table, sr_max);
    return allocate_reductions(table, occurrence_order(table), sr_max);
}

SamplingSchedule SimResult::applied(std::size_t round) const
{
    if (round == 0)
        return SamplingSchedule::full_rate(sink_matrix.n_streams(), sr_max);
    return schedules.at(round - 1);
}

SimResult run_simulation(const SimConfig& config, const ReadingMatrix& truth)
{
    validate(config.energy);
    const RoundConfig& rc = config.round;
    if (rc.rounds < 1 || rc.slots_per_round < 2)
        throw std::invalid_argument("simulation needs rounds >= 1 and slots_per_round >= 2");
    if (truth.n_slots() != rc.total_slots())
        throw std::invalid_argument(fmt::format("truth has {} slots, expected {} rounds x {} slots", truth.n_slots(),
                                                rc.rounds, rc.slots_per_round));
    if (truth.count_missing() != 0)
        throw std::invalid_argument("truth matrix must be dense");
    if (const auto v = validate_matrix(truth, rc); !v.ok())
        throw std::invalid_argument(fmt::format("truth matrix invalid: {}", v.violations.front().message));

    const std::size_t n = truth.n_streams();
    const auto m = static_cast<std::size_t>(rc.slots_per_round);
    const int sr_max = rc.sr_max();

    SimResult result;
    result.truth_matrix = truth;
    result.sr_max = sr_max;
    result.counters.assign(n, ActivityCounters{});
    for (auto& c : result.counters)
        c.tx_distance_m = config.energy.distance_m;
    std::vector<double> sink_values(n * truth.n_slots(), kMissing);

    SamplingSchedule current = SamplingSchedule::full_rate(n, sr_max);
    for (int r = 0; r < rc.rounds; ++r) {
        const std::size_t first = static_cast<std::size_t>(r) * m;
        const auto outcome = run_round(truth.slice(first, m), current, config.energy);
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t k = 0; k < m; ++k)
                sink_values[s * truth.n_slots() + first + k] = outcome.sink_slice.at(s, k);
            result.counters[s] += outcome.deltas[s];
        }

        // Round end at the cluster head; the new schedule is in force from the next slot 0.
        current = ch_schedule(outcome.sink_slice, config.mode, sr_max);
        result.schedules.push_back(current);
        if (config.mode != SchedulingMode::FixedMax && r + 1 < rc.rounds) {
            for (auto& c : result.counters)
                ++c.rx_packets;
        }
    }
    result.sink_matrix = ReadingMatrix(truth.streams(), truth.timestamps(), std::move(sink_values));
    return result;
}

}  // namespace stcsta
