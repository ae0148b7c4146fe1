#pragma once

// CSV artifacts consumed by the plotting tools. Numbers use the shortest round-trip
// representation so that reruns are byte-identical.

#include <iosfwd>
#include <string>
#include <vector>

#include "stcsta/core.hpp"
#include "stcsta/energy.hpp"
#include "stcsta/metrics.hpp"
#include "stcsta/simulate.hpp"

namespace stcsta {

struct ManifestRow {
    std::string scenario;
    std::string mode;
    int rounds = 0;
    int slots_per_round = 0;
    std::size_t n_streams = 0;
    double sampled_pct = 0.0;
    double transmitted_pct = 0.0;
    double total_energy_J = 0.0;
};

void write_manifest_header(std::ostream& out);
void write_manifest_row(std::ostream& out, const ManifestRow& row);

// round,node_id,feature,reduction_pct,samples_next_round; `round` is the 1-based round whose
// data produced the schedule.
void write_schedule_csv(std::ostream& out, const std::vector<StreamId>& streams,
                        const std::vector<SamplingSchedule>& schedules);

// node_id,e_sampling_J,e_logging_J,e_processing_J,e_radio_J,e_total_J
void write_energy_csv(std::ostream& out, const std::vector<StreamId>& streams,
                      const std::vector<ActivityCounters>& counters, const EnergyParams& params);

// scenario,mode,feature,rmse,mae plus a final "all" row; empty fields when nothing was imputed.
void write_quality_csv(std::ostream& out, const std::string& scenario, const std::string& mode,
                       const QualityReport& report);

// stream,period,count with 1-based periods.
void write_census_csv(std::ostream& out, const std::vector<StreamId>& streams, const Census& census);

// timestamp,node_id,<feature>...,<feature>_was_imputed... for the features present.
// Pass an empty mask to omit the flag columns.
void write_matrix_csv(std::ostream& out, const ReadingMatrix& matrix, const CellMask* mask);

}  // namespace stcsta
