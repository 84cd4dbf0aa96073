#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aedet/types.hpp"

namespace aedet {

// Ground-truth record class. Labels only steer dataset construction and
// evaluation; no training computation ever reads them. The two anomaly
// variants exist so the per-type metrics can be reported; classification
// itself is binary.
enum class Label {
    Normal,
    AnomalyPowersave,
    AnomalyPerformance,
    Unlabeled,
};

inline bool is_anomaly(Label l) {
    return l == Label::AnomalyPowersave || l == Label::AnomalyPerformance;
}

std::string to_string(Label l);

// Parses the CSV spelling (normal|powersave|performance|unlabeled).
// Throws DataError on anything else.
Label parse_label(const std::string& text);

// One timestamped feature vector for one node. Feature values are raw
// engineering units at ingestion and unitless in [0, 1] after normalization.
struct TelemetryRecord {
    std::string node_id;
    std::int64_t timestamp = 0;  // seconds since epoch, one record per 5-minute interval
    Vector features;
    Label label = Label::Unlabeled;
    bool idle = false;
};

// Per-node record collection split into the training set, the normal test
// set and the anomalous test set. Splits hold only non-idle records; the two
// normal splits are disjoint by (node_id, timestamp) identity.
struct NodeDataset {
    std::string node_id;
    std::vector<std::string> feature_names;
    std::vector<TelemetryRecord> train;
    std::vector<TelemetryRecord> test_normal;
    std::vector<TelemetryRecord> test_anomaly;

    Index feature_count() const { return static_cast<Index>(feature_names.size()); }
};

struct Violation {
    std::string node_id;
    std::int64_t timestamp = 0;
    std::string rule;     // short identifier of the broken invariant
    std::string message;  // human-readable description naming the record
};

// Checks every NodeDataset invariant: split membership by label, non-idle
// splits, train/test_normal disjointness, constant feature width. Violations
// are data, not failures; an empty result means the dataset is well formed.
std::vector<Violation> validate_dataset(const NodeDataset& ds);

}  // namespace aedet
