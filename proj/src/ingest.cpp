#include "stcsta/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace stcsta {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s)
{
    T v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        return std::nullopt;
    return v;
}

bool is_gap_token(std::string_view s)
{
    return s.empty() || s == "nan" || s == "NaN" || s == "NAN" || s == "Nan";
}

struct NodeRows {
    std::vector<double> timestamps;
    std::vector<std::vector<double>> values;  // per selected feature
    std::vector<std::size_t> lines;
};

}  // namespace

std::size_t RawDataset::min_length() const
{
    if (values.empty())
        return 0;
    std::size_t n = values.front().size();
    for (const auto& v : values)
        n = std::min(n, v.size());
    return n;
}

RawDataset load_dataset(const std::filesystem::path& path, const std::vector<Feature>& features,
                        std::size_t max_readings)
{
    std::ifstream in(path);
    if (!in)
        throw IngestError(fmt::format("cannot open dataset '{}'", path.string()));
    return load_dataset(in, features, max_readings);
}

RawDataset load_dataset(std::istream& in, const std::vector<Feature>& features, std::size_t max_readings)
{
    if (features.empty())
        throw IngestError("no features selected");

    std::string line;
    if (!std::getline(in, line))
        throw IngestError("dataset is empty (header row required)");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
        line.erase(0, 3);  // UTF-8 BOM

    const auto header = split(line);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        return std::nullopt;
    };

    std::vector<std::string> missing;
    const auto ts_col = column("timestamp");
    const auto node_col = column("node_id");
    if (!ts_col)
        missing.emplace_back("timestamp");
    if (!node_col)
        missing.emplace_back("node_id");
    std::vector<std::size_t> feature_cols;
    for (Feature f : features) {
        if (auto c = column(to_string(f)))
            feature_cols.push_back(*c);
        else
            missing.emplace_back(to_string(f));
    }
    if (!missing.empty())
        throw IngestError(fmt::format("missing required columns: {}", fmt::join(missing, ", ")));

    RawDataset out;
    std::map<int, NodeRows> nodes;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            out.rejections.push_back({line_no, fmt::format("expected {} fields, found {}", header.size(), cells.size())});
            continue;
        }
        const auto ts = parse_number<std::int64_t>(cells[*ts_col]);
        const auto node = parse_number<int>(cells[*node_col]);
        if (!ts || !node || *node < 0) {
            out.rejections.push_back({line_no, "unparseable timestamp or node_id"});
            continue;
        }
        std::vector<double> vals(features.size());
        bool ok = true;
        for (std::size_t f = 0; f < features.size(); ++f) {
            const auto cell = cells[feature_cols[f]];
            if (is_gap_token(cell)) {
                vals[f] = kMissing;
                continue;
            }
            const auto v = parse_number<double>(cell);
            if (!v || !std::isfinite(*v)) {
                out.rejections.push_back(
                    {line_no, fmt::format("unparseable value '{}' for {}", cell, to_string(features[f]))});
                ok = false;
                break;
            }
            vals[f] = *v;
        }
        if (!ok)
            continue;

        auto& rows = nodes[*node];
        if (rows.values.empty())
            rows.values.resize(features.size());
        if (!rows.timestamps.empty() && static_cast<double>(*ts) <= rows.timestamps.back())
            throw IngestError(fmt::format("line {}: timestamps of node {} are not increasing", line_no, *node));
        rows.timestamps.push_back(static_cast<double>(*ts));
        rows.lines.push_back(line_no);
        for (std::size_t f = 0; f < features.size(); ++f)
            rows.values[f].push_back(vals[f]);
    }

    for (auto& [node, rows] : nodes) {
        const std::size_t keep = max_readings ? std::min(max_readings, rows.timestamps.size()) : rows.timestamps.size();
        rows.timestamps.resize(keep);
        for (std::size_t f = 0; f < features.size(); ++f) {
            auto& v = rows.values[f];
            v.resize(keep);
            for (std::size_t i = 0; i < keep; ++i) {
                if (!is_present(v[i]))
                    throw IngestError(fmt::format("line {}: node {} has a gap in {}; supply a complete series or "
                                                  "lower max_readings",
                                                  rows.lines[i], node, to_string(features[f])));
            }
            out.streams.push_back({node, features[f]});
            out.timestamps.push_back(rows.timestamps);
            out.values.push_back(std::move(v));
        }
    }
    return out;
}

RawDataset decimate(const RawDataset& dataset, int k)
{
    if (k < 1)
        throw std::domain_error(fmt::format("decimation factor must be >= 1, got {}", k));
    RawDataset out;
    out.streams = dataset.streams;
    out.rejections = dataset.rejections;
    const auto step = static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < dataset.n_streams(); ++s) {
        std::vector<double> ts;
        std::vector<double> vs;
        const auto n = dataset.values[s].size();
        ts.reserve((n + step - 1) / step);
        vs.reserve((n + step - 1) / step);
        for (std::size_t i = 0; i < n; i += step) {
            ts.push_back(dataset.timestamps[s][i]);
            vs.push_back(dataset.values[s][i]);
        }
        out.timestamps.push_back(std::move(ts));
        out.values.push_back(std::move(vs));
    }
    return out;
}

ReadingMatrix to_reading_matrix(const RawDataset& dataset, const RoundConfig& config)
{
    if (config.slots_per_round < 1 || config.rounds < 1)
        throw IngestError("round configuration needs slots_per_round >= 1 and rounds >= 1");
    const std::size_t t = config.total_slots();
    std::vector<double> vals;
    vals.reserve(dataset.n_streams() * t);
    for (std::size_t s = 0; s < dataset.n_streams(); ++s) {
        const auto& v = dataset.values[s];
        if (v.size() < t)
            throw IngestError(fmt::format("stream {} has {} readings, need {} ({} rounds x {} slots)",
                                          to_string(dataset.streams[s]), v.size(), t, config.rounds,
                                          config.slots_per_round));
        vals.insert(vals.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(t));
    }
    const double t0 = dataset.n_streams() > 0 && !dataset.timestamps[0].empty() ? dataset.timestamps[0][0] : 0.0;
    return ReadingMatrix(dataset.streams, regular_timestamps(t0, config.slot_seconds(), t), std::move(vals));
}

void write_canonical_csv(std::ostream& out, const RawDataset& dataset)
{
    out << "timestamp,node_id";
    for (Feature f : kAllFeatures)
        out << ',' << to_string(f);
    out << '\n';

    // node -> feature -> stream index
    std::map<int, std::array<std::optional<std::size_t>, kFeatureCount>> by_node;
    for (std::size_t s = 0; s < dataset.n_streams(); ++s)
        by_node[dataset.streams[s].node_index][static_cast<std::size_t>(dataset.streams[s].feature)] = s;

    struct Row {
        double ts;
        int node;
        std::array<std::optional<double>, kFeatureCount> vals;
    };
    std::vector<Row> rows;
    for (const auto& [node, slots] : by_node) {
        std::optional<std::size_t> ref;
        for (const auto& s : slots)
            if (s && !ref)
                ref = s;
        const auto& ts = dataset.timestamps[*ref];
        for (std::size_t i = 0; i < ts.size(); ++i) {
            Row r{ts[i], node, {}};
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                if (slots[f] && i < dataset.values[*slots[f]].size())
                    r.vals[f] = dataset.values[*slots[f]][i];
            rows.push_back(r);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (const auto& r : rows) {
        out << fmt::format("{},{}", static_cast<std::int64_t>(r.ts), r.node);
        for (const auto& v : r.vals) {
            out << ',';
            if (v)
                out << fmt::format("{}", *v);
        }
        out << '\n';
    }
}

}  // namespace stcsta
