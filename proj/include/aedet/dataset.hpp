#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aedet/telemetry.hpp"
#include "aedet/types.hpp"

namespace aedet {

// Per-feature min-max scaling fitted exclusively on training records.
// span[i] == 0 marks a constant feature; such features normalize to 0 so the
// feature width stays stable across nodes.
struct NormalizationParams {
    std::vector<std::string> feature_names;
    Vector min;
    Vector span;  // max - min, always >= 0
    std::size_t fitted_on = 0;

    Index feature_count() const { return min.size(); }
};

struct SplitSpec {
    Real train_fraction = 0.8;
    std::uint64_t rng_seed = 0;
};

// Keeps exactly the records with idle == false, order preserved.
std::vector<TelemetryRecord> drop_idle(const std::vector<TelemetryRecord>& records);

// Randomly partitions normal-period records into (train, test_normal):
// seeded shuffle of record indices, then a prefix/suffix cut with
// |train| = round(train_fraction * N). Deterministic for a fixed seed.
// Throws DataError when fewer than 10 records are supplied.
std::pair<std::vector<TelemetryRecord>, std::vector<TelemetryRecord>> split_normal(
    const std::vector<TelemetryRecord>& records, const SplitSpec& spec);

// Column-wise min and span over the training records.
NormalizationParams fit_normalization(const std::vector<TelemetryRecord>& train,
                                      const std::vector<std::string>& feature_names);

// value <- (raw - min) / span, clamped to [0, 1]; constant features map to 0.
Vector apply_normalization(const Vector& features, const NormalizationParams& params);
TelemetryRecord apply_normalization(const TelemetryRecord& record,
                                    const NormalizationParams& params);

// Inverse transform for non-clamped values; used to check the round trip.
Vector denormalize(const Vector& normalized, const NormalizationParams& params);

// Builds the three-way split for one node from ingested records: drops idle
// records, routes Normal labels through split_normal and anomaly labels to
// test_anomaly. Unlabeled records are excluded from every split.
NodeDataset make_node_dataset(const std::string& node_id,
                              const std::vector<std::string>& feature_names,
                              const std::vector<TelemetryRecord>& records,
                              const SplitSpec& spec);

// Returns a copy of the dataset with every split normalized with `params`.
NodeDataset normalize_dataset(const NodeDataset& ds, const NormalizationParams& params);

}  // namespace aedet
