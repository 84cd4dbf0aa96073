#include "aedet/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <system_error>

#include "aedet/errors.hpp"

namespace aedet {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_double(std::string_view text, const std::string& where) {
    double value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw DataError(where + ": bad number '" + std::string(text) + "'");
    return value;
}

std::int64_t parse_int(std::string_view text, const std::string& where) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw DataError(where + ": bad integer '" + std::string(text) + "'");
    return value;
}

void format_double(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

void ingest_into(const std::filesystem::path& path, IngestResult& result) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_fields(line);
    if (header.size() < 5 || header[0] != "timestamp" || header[1] != "node_id" ||
        header[2] != "idle" || header[3] != "label")
        throw DataError(path.string() + ": bad header, expected timestamp,node_id,idle,label,...");

    std::vector<std::string> names(header.begin() + 4, header.end());
    if (result.feature_names.empty()) {
        result.feature_names = names;
    } else if (names != result.feature_names) {
        throw DataError(path.string() + ": feature names disagree with previously ingested files");
    }
    const std::size_t features = names.size();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);

        const auto fields = split_fields(line);
        if (fields.size() != 4 + features)
            throw DataError(where + ": expected " + std::to_string(4 + features) +
                            " fields, got " + std::to_string(fields.size()));

        TelemetryRecord rec;
        rec.timestamp = parse_int(fields[0], where);
        rec.node_id = std::string(fields[1]);
        if (rec.node_id.empty()) throw DataError(where + ": empty node_id");
        const std::int64_t idle = parse_int(fields[2], where);
        if (idle != 0 && idle != 1) throw DataError(where + ": idle must be 0 or 1");
        rec.idle = idle == 1;
        try {
            rec.label = parse_label(std::string(fields[3]));
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        rec.features.resize(static_cast<Index>(features));
        for (std::size_t i = 0; i < features; ++i)
            rec.features[static_cast<Index>(i)] = parse_double(fields[4 + i], where);

        result.by_node[rec.node_id].push_back(std::move(rec));
    }
}

void sort_and_check(IngestResult& result) {
    for (auto& [node, records] : result.by_node) {
        std::stable_sort(records.begin(), records.end(),
                         [](const TelemetryRecord& a, const TelemetryRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
        for (std::size_t i = 1; i < records.size(); ++i) {
            if (records[i].timestamp == records[i - 1].timestamp)
                throw DataError("duplicate (node_id, timestamp) = (" + node + ", " +
                                std::to_string(records[i].timestamp) + ")");
        }
    }
}

}  // namespace

IngestResult ingest(const std::filesystem::path& path) {
    IngestResult result;
    ingest_into(path, result);
    sort_and_check(result);
    return result;
}

IngestResult ingest_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    if (files.empty()) throw DataError("no .csv files in " + dir.string());
    std::sort(files.begin(), files.end());

    IngestResult result;
    for (const auto& file : files) ingest_into(file, result);
    sort_and_check(result);
    return result;
}

void write_telemetry_csv(const std::filesystem::path& path,
                         const std::vector<std::string>& feature_names,
                         const std::vector<TelemetryRecord>& records) {
    std::ofstream out(path, std::ios::binary);  // binary keeps line endings fixed
    if (!out) throw DataError("cannot write " + path.string());

    std::string line = "timestamp,node_id,idle,label";
    for (const auto& name : feature_names) {
        line += ',';
        line += name;
    }
    line += '\n';
    out << line;

    for (const auto& rec : records) {
        if (rec.features.size() != static_cast<Index>(feature_names.size()))
            throw DataError("record width does not match feature names while writing " +
                            path.string());
        line.clear();
        line += std::to_string(rec.timestamp);
        line += ',';
        line += rec.node_id;
        line += ',';
        line += rec.idle ? '1' : '0';
        line += ',';
        line += to_string(rec.label);
        for (Index i = 0; i < rec.features.size(); ++i) {
            line += ',';
            format_double(line, rec.features[i]);
        }
        line += '\n';
        out << line;
    }
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace aedet
