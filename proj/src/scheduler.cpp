#include "stcsta/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

namespace stcsta {

std::vector<double> forward_fill(std::span<const double> row)
{
    if (row.empty())
        return {};
    if (!is_present(row[0]))
        throw std::domain_error("forward fill needs a present first value");
    std::vector<double> out(row.begin(), row.end());
    for (std::size_t k = 1; k < out.size(); ++k) {
        if (!is_present(out[k]))
            out[k] = out[k - 1];
    }
    return out;
}

ReadingMatrix forward_fill(const ReadingMatrix& matrix)
{
    std::vector<double> vals;
    vals.reserve(matrix.values().size());
    for (std::size_t s = 0; s < matrix.n_streams(); ++s) {
        auto filled = forward_fill(matrix.row(s));
        vals.insert(vals.end(), filled.begin(), filled.end());
    }
    return ReadingMatrix(matrix.streams(), matrix.timestamps(), std::move(vals));
}

double pearson(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size())
        throw std::invalid_argument(fmt::format("pearson: length mismatch ({} vs {})", u.size(), v.size()));
    const std::size_t n = u.size();
    if (n < 2)
        throw std::invalid_argument("pearson: need at least two samples");

    auto constant = [](std::span<const double> x) {
        return std::all_of(x.begin(), x.end(), [&](double e) { return e == x[0]; });
    };
    if (constant(u) || constant(v))
        return 0.0;

    double mu_u = 0.0;
    double mu_v = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mu_u += u[k];
        mu_v += v[k];
    }
    mu_u /= static_cast<double>(n);
    mu_v /= static_cast<double>(n);

    double ss_u = 0.0;
    double ss_v = 0.0;
    double cross = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double du = u[k] - mu_u;
        const double dv = v[k] - mu_v;
        ss_u += du * du;
        ss_v += dv * dv;
        cross += du * dv;
    }
    // cov / (sigma_u sigma_v) with (n - 1) in all three terms; the factors cancel.
    const double denom = std::sqrt(ss_u * ss_v);
    if (denom == 0.0)
        return 0.0;
    const double rho = cross / denom;
    return std::clamp(rho, -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const ReadingMatrix& matrix)
{
    const std::size_t n = matrix.n_streams();
    if (matrix.count_missing() != 0)
        throw std::domain_error("correlation_matrix: rows must be forward-filled first");
    CorrelationMatrix corr(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j)
            corr.set(i, j, pearson(matrix.row(i), matrix.row(j)));
    }
    return corr;
}

CorrelationTable best_match_table(const CorrelationMatrix& corr)
{
    const std::size_t n = corr.size();
    if (n < 2)
        throw std::invalid_argument("best_match_table: need at least two streams");
    CorrelationTable table;
    table.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::optional<std::size_t> best;
        double best_rho = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const double rho = corr.at(i, j);
            if (!best || rho > best_rho) {
                best = j;
                best_rho = rho;
            }
        }
        table.rows.push_back({i, *best, best_rho});
    }
    return table;
}

OccurrenceOrder occurrence_order(const CorrelationTable& table)
{
    OccurrenceOrder order;
    for (const auto& row : table.rows) {
        auto it = std::find_if(order.begin(), order.end(),
                               [&](const OccurrenceEntry& e) { return e.stream == row.best_match; });
        if (it == order.end())
            order.push_back({row.best_match, 1});
        else
            ++it->count;
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const OccurrenceEntry& a, const OccurrenceEntry& b) { return a.count < b.count; });
    return order;
}

SamplingSchedule allocate_reductions(const CorrelationTable& table, const OccurrenceOrder& order, int sr_max)
{
    const std::size_t n = table.rows.size();
    std::vector<std::optional<ReductionPct>> decided(n);

    for (const auto& entry : order) {
        const std::size_t j = entry.stream;
        const auto& row = table.rows.at(j);
        const std::size_t match = row.best_match;
        if (decided[j])
            continue;
        if (!decided[match])
            decided[j] = ReductionPct::from_correlation(row.rho);
        else
            decided[j] = decided[match]->complement();
    }

    std::vector<ReductionPct> reductions(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (decided[i]) {
            reductions[i] = *decided[i];
            continue;
        }
        // Never matched: every stream in the order is decided by now, and any match is in the order.
        const std::size_t match = table.rows[i].best_match;
        reductions[i] = decided[match] ? decided[match]->complement() : ReductionPct::from_correlation(table.rows[i].rho);
    }
    return SamplingSchedule(std::move(reductions), sr_max);
}

SamplingSchedule exaggerated_allocate(const CorrelationTable& table, int sr_max)
{
    std::vector<ReductionPct> reductions;
    reductions.reserve(table.rows.size());
    for (const auto& row : table.rows)
        reductions.push_back(ReductionPct::from_correlation(row.rho));
    return SamplingSchedule(std::move(reductions), sr_max);
}

}  // namespace stcsta
