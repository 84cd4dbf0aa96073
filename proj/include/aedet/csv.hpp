#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aedet/telemetry.hpp"

namespace aedet {

// Telemetry CSV format, UTF-8, comma separated, '.' decimal point:
//   timestamp,node_id,idle,label,<feature_name_1>,...,<feature_name_F>
// timestamps are integer epoch seconds, idle is 0/1, label is one of
// normal|powersave|performance|unlabeled.
struct IngestResult {
    std::vector<std::string> feature_names;
    // Sorted by node id; each record list sorted by timestamp, strictly
    // increasing.
    std::map<std::string, std::vector<TelemetryRecord>> by_node;
};

// Reads one telemetry CSV (single node or combined). Throws DataError naming
// the offending line for malformed rows, inconsistent feature counts or
// duplicate (node_id, timestamp) pairs.
IngestResult ingest(const std::filesystem::path& path);

// Reads every *.csv in a directory (sorted by filename) and merges them.
// Feature names must agree across files; duplicate (node_id, timestamp)
// pairs across files are rejected like in-file duplicates.
IngestResult ingest_dir(const std::filesystem::path& dir);

// Writes records in the telemetry CSV format. Floats are emitted with
// shortest round-trip formatting, so equal inputs give byte-identical files.
void write_telemetry_csv(const std::filesystem::path& path,
                         const std::vector<std::string>& feature_names,
                         const std::vector<TelemetryRecord>& records);

}  // namespace aedet
