#pragma once

// Canonical CSV loading, decimation and conversion to dense reading matrices.
//
// Canonical schema (UTF-8, header required, column order free, extra columns ignored):
//   timestamp,node_id,ambient_temp,surface_temp,rel_humidity,wind_speed
// One row per node per native sample time.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "stcsta/core.hpp"

namespace stcsta {

class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RowRejection {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string reason;
};

struct RawDataset {
    std::vector<StreamId> streams;
    std::vector<std::vector<double>> timestamps;  // per stream
    std::vector<std::vector<double>> values;      // per stream
    std::vector<RowRejection> rejections;

    std::size_t n_streams() const { return streams.size(); }
    // Shortest stream length (0 when empty).
    std::size_t min_length() const;
};

// Throws IngestError on a missing file, missing required columns, non-monotone
// timestamps within a node, or a gap (empty / nan cell) inside the retained readings.
// Rows with unparseable fields are skipped and reported in `rejections`. Only the first
// `max_readings` rows of each node are kept (0 keeps all).
RawDataset load_dataset(const std::filesystem::path& path, const std::vector<Feature>& features,
                        std::size_t max_readings);
RawDataset load_dataset(std::istream& in, const std::vector<Feature>& features, std::size_t max_readings);

// Keeps readings 0, k, 2k, ...; throws std::domain_error when k < 1.
RawDataset decimate(const RawDataset& dataset, int k);

// Dense matrix of exactly rounds * slots_per_round slots per stream.
// Throws IngestError when a stream is shorter than that.
ReadingMatrix to_reading_matrix(const RawDataset& dataset, const RoundConfig& config);

// Writes the dataset in the canonical schema. Streams of one node must share timestamps.
void write_canonical_csv(std::ostream& out, const RawDataset& dataset);

}  // namespace stcsta
