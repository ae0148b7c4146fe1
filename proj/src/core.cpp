#include "stcsta/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace stcsta {

std::string_view to_string(Feature f)
{
    switch (f) {
    case Feature::AmbientTemp:
        return "ambient_temp";
    case Feature::SurfaceTemp:
        return "surface_temp";
    case Feature::RelHumidity:
        return "rel_humidity";
    case Feature::WindSpeed:
        return "wind_speed";
    }
    return "unknown";
}

Feature parse_feature(std::string_view name)
{
    for (Feature f : kAllFeatures) {
        if (to_string(f) == name)
            return f;
    }
    throw std::invalid_argument(fmt::format("unknown feature '{}'", name));
}

std::string_view unit_of(Feature f)
{
    switch (f) {
    case Feature::AmbientTemp:
    case Feature::SurfaceTemp:
        return "degC";
    case Feature::RelHumidity:
        return "%";
    case Feature::WindSpeed:
        return "m/s";
    }
    return "";
}

std::string to_string(const StreamId& id) { return fmt::format("{}:{}", id.node_index, to_string(id.feature)); }

ReadingMatrix::ReadingMatrix(std::vector<StreamId> streams, std::vector<double> timestamps,
                             std::vector<double> values)
    : streams_(std::move(streams)), timestamps_(std::move(timestamps)), values_(std::move(values))
{
    if (values_.size() != streams_.size() * timestamps_.size())
        throw std::invalid_argument(fmt::format("reading matrix holds {} values, expected {} x {}", values_.size(),
                                                streams_.size(), timestamps_.size()));
}

ReadingMatrix::ReadingMatrix(std::vector<StreamId> streams, std::vector<double> timestamps)
    : streams_(std::move(streams)), timestamps_(std::move(timestamps)),
      values_(streams_.size() * timestamps_.size(), kMissing)
{
}

ReadingMatrix ReadingMatrix::slice(std::size_t first, std::size_t count) const
{
    if (first + count > n_slots())
        throw std::out_of_range(fmt::format("slice [{}, {}) exceeds {} slots", first, first + count, n_slots()));
    std::vector<double> ts(timestamps_.begin() + static_cast<std::ptrdiff_t>(first),
                           timestamps_.begin() + static_cast<std::ptrdiff_t>(first + count));
    std::vector<double> vals;
    vals.reserve(n_streams() * count);
    for (std::size_t s = 0; s < n_streams(); ++s) {
        auto r = row(s).subspan(first, count);
        vals.insert(vals.end(), r.begin(), r.end());
    }
    return ReadingMatrix(streams_, std::move(ts), std::move(vals));
}

ReadingMatrix ReadingMatrix::select_rows(std::span<const std::size_t> rows) const
{
    std::vector<StreamId> ids;
    std::vector<double> vals;
    vals.reserve(rows.size() * n_slots());
    for (std::size_t r : rows) {
        ids.push_back(streams_.at(r));
        auto src = row(r);
        vals.insert(vals.end(), src.begin(), src.end());
    }
    return ReadingMatrix(std::move(ids), timestamps_, std::move(vals));
}

std::size_t ReadingMatrix::count_missing() const
{
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return !is_present(v); }));
}

bool operator==(const ReadingMatrix& a, const ReadingMatrix& b)
{
    if (a.streams_ != b.streams_ || a.timestamps_ != b.timestamps_ || a.values_.size() != b.values_.size())
        return false;
    // NaN cells compare equal to NaN cells.
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
        const double x = a.values_[i];
        const double y = b.values_[i];
        if (is_present(x) != is_present(y) || (is_present(x) && x != y))
            return false;
    }
    return true;
}

std::vector<double> regular_timestamps(double t0, double step, std::size_t count)
{
    std::vector<double> ts(count);
    for (std::size_t i = 0; i < count; ++i)
        ts[i] = t0 + step * static_cast<double>(i);
    return ts;
}

ValidationResult validate_matrix(const ReadingMatrix& matrix, const RoundConfig& config)
{
    ValidationResult out;
    auto add = [&](Violation::Kind kind, std::optional<std::size_t> stream, std::optional<std::size_t> slot,
                   std::string msg) { out.violations.push_back({kind, stream, slot, std::move(msg)}); };

    const std::size_t n = matrix.n_streams();
    const std::size_t t = matrix.n_slots();

    if (config.slots_per_round < 2) {
        add(Violation::Kind::Dimension, {}, {}, fmt::format("slots per round must be >= 2, got {}", config.slots_per_round));
        return out;
    }
    const auto m = static_cast<std::size_t>(config.slots_per_round);
    if (t % m != 0)
        add(Violation::Kind::Dimension, {}, {}, fmt::format("T not a multiple of m (T={}, m={})", t, m));
    if (matrix.values().size() != n * t)
        add(Violation::Kind::Dimension, {}, {}, "value count does not match streams x slots");

    std::set<StreamId> seen;
    for (std::size_t s = 0; s < n; ++s) {
        if (!seen.insert(matrix.streams()[s]).second)
            add(Violation::Kind::DuplicateStream, s, {},
                fmt::format("duplicate stream {}", to_string(matrix.streams()[s])));
    }

    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t slot = 0; slot < t; slot += m) {
            if (!is_present(matrix.at(s, slot)))
                add(Violation::Kind::MissingFirstOfRound, s, slot,
                    fmt::format("first slot of round must be present (stream {}, round {})", s, slot / m + 1));
        }
    }

    const double step = config.slot_seconds();
    const double step_tol = 1e-6 * std::abs(step);
    const auto& ts = matrix.timestamps();
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const double d = ts[i] - ts[i - 1];
        if (!(d > 0.0))
            add(Violation::Kind::NonMonotoneTimestamp, {}, i, fmt::format("timestamp at slot {} is not increasing", i));
        else if (std::abs(d - step) > step_tol)
            add(Violation::Kind::IrregularStep, {}, i,
                fmt::format("timestamp step at slot {} is {} s, expected {} s", i, d, step));
    }
    return out;
}

ReductionPct ReductionPct::from_percent(double pct)
{
    if (!(pct >= 0.0 && pct <= 100.0))
        throw std::domain_error(fmt::format("reduction {} outside [0, 100]", pct));
    return ReductionPct(std::llround(pct * kUnitsPerPercent));
}

ReductionPct ReductionPct::from_correlation(double rho)
{
    if (!(rho > 0.0))
        return ReductionPct(0);
    return ReductionPct(std::min<std::int64_t>(kFull, std::llround(rho * 100.0 * kUnitsPerPercent)));
}

std::string format_percent(ReductionPct r)
{
    const std::int64_t whole = r.units() / ReductionPct::kUnitsPerPercent;
    const std::int64_t frac = r.units() % ReductionPct::kUnitsPerPercent;
    if (frac == 0)
        return fmt::format("{}", whole);
    std::string s = fmt::format("{}.{:06d}", whole, frac);
    while (s.back() == '0')
        s.pop_back();
    return s;
}

SlotPlan slots_for_reduction(ReductionPct reduction, int sr_max)
{
    if (sr_max < 1)
        throw std::domain_error(fmt::format("sr_max must be >= 1, got {}", sr_max));
    const std::int64_t kept = ReductionPct::kFull - reduction.units();
    const std::int64_t count = static_cast<std::int64_t>(sr_max) * kept / ReductionPct::kFull;
    SlotPlan plan;
    plan.samples = static_cast<int>(std::max<std::int64_t>(1, count));
    plan.gap = sr_max / plan.samples;
    return plan;
}

SlotPlan slots_for_reduction(double reduction_pct, int sr_max)
{
    return slots_for_reduction(ReductionPct::from_percent(reduction_pct), sr_max);
}

SamplingSchedule::SamplingSchedule(std::vector<ReductionPct> reductions_in, int sr_max)
    : reductions(std::move(reductions_in))
{
    samples_next_round.reserve(reductions.size());
    for (ReductionPct r : reductions)
        samples_next_round.push_back(slots_for_reduction(r, sr_max).samples);
}

SamplingSchedule SamplingSchedule::full_rate(std::size_t n_streams, int sr_max)
{
    return SamplingSchedule(std::vector<ReductionPct>(n_streams), sr_max);
}

}  // namespace stcsta
