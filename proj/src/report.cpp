#include "stcsta/report.hpp"

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include <fmt/format.h>

namespace stcsta {

void write_manifest_header(std::ostream& out)
{
    out << "scenario,mode,rounds,slots_per_round,n_streams,sampled_pct,transmitted_pct,total_energy_J\n";
}

void write_manifest_row(std::ostream& out, const ManifestRow& r)
{
    out << fmt::format("{},{},{},{},{},{},{},{}\n", r.scenario, r.mode, r.rounds, r.slots_per_round, r.n_streams,
                       r.sampled_pct, r.transmitted_pct, r.total_energy_J);
}

void write_schedule_csv(std::ostream& out, const std::vector<StreamId>& streams,
                        const std::vector<SamplingSchedule>& schedules)
{
    out << "round,node_id,feature,reduction_pct,samples_next_round\n";
    for (std::size_t r = 0; r < schedules.size(); ++r) {
        const auto& sched = schedules[r];
        for (std::size_t s = 0; s < streams.size() && s < sched.size(); ++s)
            out << fmt::format("{},{},{},{},{}\n", r + 1, streams[s].node_index, to_string(streams[s].feature),
                               format_percent(sched.reductions[s]), sched.samples_next_round[s]);
    }
}

void write_energy_csv(std::ostream& out, const std::vector<StreamId>& streams,
                      const std::vector<ActivityCounters>& counters, const EnergyParams& params)
{
    out << "node_id,e_sampling_J,e_logging_J,e_processing_J,e_radio_J,e_total_J\n";
    for (const auto& [node, c] : aggregate_by_node(streams, counters)) {
        const auto e = node_energy(c, params);
        out << fmt::format("{},{},{},{},{},{}\n", node, e.e_sampling, e.e_logging, e.e_processing, e.e_radio,
                           e.e_total);
    }
}

namespace {

std::string score_fields(const std::optional<ErrorScore>& s)
{
    return s ? fmt::format("{},{}", s->rmse, s->mae) : std::string(",");
}

}  // namespace

void write_quality_csv(std::ostream& out, const std::string& scenario, const std::string& mode,
                       const QualityReport& report)
{
    out << "scenario,mode,feature,rmse,mae\n";
    for (const auto& [feature, score] : report.per_feature)
        out << fmt::format("{},{},{},{}\n", scenario, mode, to_string(feature), score_fields(score));
    out << fmt::format("{},{},all,{}\n", scenario, mode, score_fields(report.overall));
}

void write_census_csv(std::ostream& out, const std::vector<StreamId>& streams, const Census& census)
{
    out << "stream,period,count\n";
    for (std::size_t s = 0; s < streams.size() && s < census.counts.size(); ++s)
        for (std::size_t p = 0; p < census.n_periods; ++p)
            out << fmt::format("{},{},{}\n", to_string(streams[s]), p + 1, census.counts[s][p]);
}

void write_matrix_csv(std::ostream& out, const ReadingMatrix& matrix, const CellMask* mask)
{
    std::set<Feature> present;
    std::map<int, std::array<std::optional<std::size_t>, kFeatureCount>> by_node;
    for (std::size_t s = 0; s < matrix.n_streams(); ++s) {
        const auto& id = matrix.streams()[s];
        present.insert(id.feature);
        by_node[id.node_index][static_cast<std::size_t>(id.feature)] = s;
    }

    out << "timestamp,node_id";
    for (Feature f : present)
        out << ',' << to_string(f);
    if (mask)
        for (Feature f : present)
            out << ',' << to_string(f) << "_was_imputed";
    out << '\n';

    // Time-major so the file reads like the ingest schema.
    for (std::size_t t = 0; t < matrix.n_slots(); ++t) {
        for (const auto& [node, rows] : by_node) {
            std::string line = fmt::format("{},{}", matrix.timestamps()[t], node);
            for (Feature f : present) {
                const auto& s = rows[static_cast<std::size_t>(f)];
                line += s ? fmt::format(",{}", matrix.at(*s, t)) : std::string(",");
            }
            if (mask)
                for (Feature f : present) {
                    const auto& s = rows[static_cast<std::size_t>(f)];
                    line += s ? (mask->at(*s, t) ? ",1" : ",0") : ",";
                }
            out << line << '\n';
        }
    }
}

}  // namespace stcsta
