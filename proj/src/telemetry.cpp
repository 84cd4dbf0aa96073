#include "aedet/telemetry.hpp"

#include <set>
#include <utility>

#include "aedet/errors.hpp"

namespace aedet {

std::string to_string(Label l) {
    switch (l) {
        case Label::Normal: return "normal";
        case Label::AnomalyPowersave: return "powersave";
        case Label::AnomalyPerformance: return "performance";
        case Label::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Label parse_label(const std::string& text) {
    if (text == "normal") return Label::Normal;
    if (text == "powersave") return Label::AnomalyPowersave;
    if (text == "performance") return Label::AnomalyPerformance;
    if (text == "unlabeled") return Label::Unlabeled;
    throw DataError("unknown label '" + text + "'");
}

namespace {

std::string record_ref(const TelemetryRecord& r) {
    return "(" + r.node_id + ", " + std::to_string(r.timestamp) + ")";
}

void check_split(const NodeDataset& ds, const std::vector<TelemetryRecord>& split,
                 const std::string& split_name, bool anomalies_expected,
                 std::vector<Violation>& out) {
    for (const auto& r : split) {
        if (r.idle) {
            out.push_back({r.node_id, r.timestamp, "non_idle",
                           "idle record " + record_ref(r) + " in " + split_name});
        }
        if (r.node_id != ds.node_id) {
            out.push_back({r.node_id, r.timestamp, "node_id",
                           "record " + record_ref(r) + " in " + split_name +
                               " belongs to another node than " + ds.node_id});
        }
        const bool anomaly = is_anomaly(r.label);
        if (anomalies_expected && !anomaly) {
            out.push_back({r.node_id, r.timestamp, "label",
                           "record " + record_ref(r) + " in " + split_name +
                               " is labeled " + to_string(r.label) + ", expected an anomaly"});
        }
        if (!anomalies_expected && r.label != Label::Normal) {
            out.push_back({r.node_id, r.timestamp, "label",
                           "record " + record_ref(r) + " in " + split_name + " is labeled " +
                               to_string(r.label) + ", expected normal"});
        }
        if (r.features.size() != ds.feature_count()) {
            out.push_back({r.node_id, r.timestamp, "feature_count",
                           "record " + record_ref(r) + " in " + split_name + " has " +
                               std::to_string(r.features.size()) + " features, expected " +
                               std::to_string(ds.feature_count())});
        }
    }
}

}  // namespace

std::vector<Violation> validate_dataset(const NodeDataset& ds) {
    std::vector<Violation> out;
    check_split(ds, ds.train, "train", false, out);
    check_split(ds, ds.test_normal, "test_normal", false, out);
    check_split(ds, ds.test_anomaly, "test_anomaly", true, out);

    // train and test_normal must be disjoint by (node_id, timestamp)
    std::set<std::pair<std::string, std::int64_t>> train_ids;
    for (const auto& r : ds.train) train_ids.emplace(r.node_id, r.timestamp);
    for (const auto& r : ds.test_normal) {
        if (train_ids.count({r.node_id, r.timestamp})) {
            out.push_back({r.node_id, r.timestamp, "disjoint",
                           "record (" + r.node_id + ", " + std::to_string(r.timestamp) +
                               ") appears in both train and test_normal"});
        }
    }
    return out;
}

}  // namespace aedet
