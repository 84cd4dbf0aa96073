#include "aedet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aedet/errors.hpp"
#include "aedet/rng.hpp"

namespace aedet {

std::vector<TelemetryRecord> drop_idle(const std::vector<TelemetryRecord>& records) {
    std::vector<TelemetryRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (!r.idle) out.push_back(r);
    return out;
}

std::pair<std::vector<TelemetryRecord>, std::vector<TelemetryRecord>> split_normal(
    const std::vector<TelemetryRecord>& records, const SplitSpec& spec) {
    if (records.size() < 10)
        throw DataError("split_normal: need at least 10 records, got " +
                        std::to_string(records.size()));
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("split_normal: train_fraction must be in (0, 1)");

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.rng_seed);
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(records.size())));

    std::pair<std::vector<TelemetryRecord>, std::vector<TelemetryRecord>> out;
    out.first.reserve(n_train);
    out.second.reserve(records.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(records[order[i]]);
    return out;
}

NormalizationParams fit_normalization(const std::vector<TelemetryRecord>& train,
                                      const std::vector<std::string>& feature_names) {
    if (train.empty()) throw DataError("fit_normalization: empty training set");
    const Index features = train.front().features.size();
    if (features != static_cast<Index>(feature_names.size()))
        throw DataError("fit_normalization: feature names do not match record width");

    NormalizationParams params;
    params.feature_names = feature_names;
    params.min = train.front().features;
    Vector max = train.front().features;
    for (const auto& r : train) {
        if (r.features.size() != features)
            throw DataError("fit_normalization: inconsistent feature count");
        params.min = params.min.cwiseMin(r.features);
        max = max.cwiseMax(r.features);
    }
    params.span = max - params.min;
    params.fitted_on = train.size();
    return params;
}

Vector apply_normalization(const Vector& features, const NormalizationParams& params) {
    if (features.size() != params.feature_count())
        throw DataError("apply_normalization: feature width mismatch");
    Vector out(features.size());
    for (Index i = 0; i < features.size(); ++i) {
        const Real span = params.span[i];
        out[i] = span > 0 ? std::clamp((features[i] - params.min[i]) / span, Real(0), Real(1))
                          : Real(0);
    }
    return out;
}

TelemetryRecord apply_normalization(const TelemetryRecord& record,
                                    const NormalizationParams& params) {
    TelemetryRecord out = record;
    out.features = apply_normalization(record.features, params);
    return out;
}

Vector denormalize(const Vector& normalized, const NormalizationParams& params) {
    if (normalized.size() != params.feature_count())
        throw DataError("denormalize: feature width mismatch");
    return (normalized.array() * params.span.array() + params.min.array()).matrix();
}

NodeDataset make_node_dataset(const std::string& node_id,
                              const std::vector<std::string>& feature_names,
                              const std::vector<TelemetryRecord>& records,
                              const SplitSpec& spec) {
    NodeDataset ds;
    ds.node_id = node_id;
    ds.feature_names = feature_names;

    std::vector<TelemetryRecord> normal;
    for (const auto& r : drop_idle(records)) {
        if (r.label == Label::Normal) {
            normal.push_back(r);
        } else if (is_anomaly(r.label)) {
            ds.test_anomaly.push_back(r);
        }
        // Unlabeled records never enter a split; they can only be scored.
    }
    std::tie(ds.train, ds.test_normal) = split_normal(normal, spec);
    return ds;
}

NodeDataset normalize_dataset(const NodeDataset& ds, const NormalizationParams& params) {
    NodeDataset out;
    out.node_id = ds.node_id;
    out.feature_names = ds.feature_names;
    auto normalize_all = [&](const std::vector<TelemetryRecord>& in) {
        std::vector<TelemetryRecord> res;
        res.reserve(in.size());
        for (const auto& r : in) res.push_back(apply_normalization(r, params));
        return res;
    };
    out.train = normalize_all(ds.train);
    out.test_normal = normalize_all(ds.test_normal);
    out.test_anomaly = normalize_all(ds.test_anomaly);
    return out;
}

}  // namespace aedet
