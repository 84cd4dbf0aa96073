#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aedet/autoencoder.hpp"
#include "aedet/errors.hpp"
#include "aedet/telemetry.hpp"
#include "aedet/types.hpp"

namespace aedet {

// Reconstruction error for one record, tagged with the record identity and
// ground-truth label.
struct ErrorSample {
    std::string node_id;
    std::int64_t timestamp = 0;
    Real error = 0;
    Label label = Label::Unlabeled;
};

// Reconstruction-error samples for one split of one node. The summary
// statistics are recomputed from the list on demand.
struct ErrorProfile {
    std::vector<ErrorSample> errors;
    std::string source;  // which split the samples came from

    std::vector<Real> values() const;
    Real mean() const;
    // Root mean square of the per-record errors.
    Real rms() const;
};

// Scores every record with the model, order preserved. Records must be
// normalized with the model's own normalization parameters.
ErrorProfile profile_errors(const AutoencoderModel<Real>& model,
                            const std::vector<TelemetryRecord>& records,
                            const std::string& source);

// Nearest-rank percentile: sort ascending, return the element at 1-based
// index ceil(n/100 * N). Throws DataError for an empty list or n outside
// [1, 99].
template <typename Scalar>
Scalar percentile(std::span<const Scalar> errors, int n) {
    if (errors.empty()) throw DataError("percentile: empty list");
    if (n < 1 || n > 99) throw DataError("percentile: n must be in [1, 99]");
    std::vector<Scalar> sorted(errors.begin(), errors.end());
    const auto count = static_cast<long double>(sorted.size());
    const auto rank = static_cast<std::size_t>(
        std::ceil(static_cast<long double>(n) / 100.0L * count));  // 1-based
    auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(sorted.begin(), nth, sorted.end());
    return *nth;
}

template <typename Scalar>
Scalar percentile(const std::vector<Scalar>& errors, int n) {
    return percentile(std::span<const Scalar>(errors), n);
}

// theta is the nearest-rank percentile_n-th percentile of the calibration
// error list.
struct Threshold {
    Real theta = 0;
    int percentile_n = 0;
    std::size_t calibrated_on = 0;
};

Threshold make_threshold(const std::vector<Real>& errors, int n);

// Anomalous iff the error strictly exceeds theta; error == theta is normal.
inline bool classify(Real error, const Threshold& th) { return error > th.theta; }

// Binary confusion counts with anomaly as the positive class.
struct Confusion {
    std::size_t tp = 0;  // predicted anomaly, truly anomaly
    std::size_t fp = 0;  // predicted anomaly, truly normal
    std::size_t tn = 0;  // predicted normal, truly normal
    std::size_t fn = 0;  // predicted normal, truly anomaly

    std::size_t total() const { return tp + fp + tn + fn; }
    void add(bool predicted_anomaly, bool truly_anomaly);
};

// F = 2 * precision * recall / (precision + recall) from one class's view;
// 0 when precision + recall is 0.
Real f_score(std::size_t tp, std::size_t fp, std::size_t fn);

// Per-class F-scores of the binary confusion matrix.
Real f_score_anomaly(const Confusion& c);
Real f_score_normal(const Confusion& c);

struct NormalizedErrors {
    Real mae = 0;   // mean(other) / mean(train)
    Real rmse = 0;  // rms(other) / rms(train)
};

// Errors of a dataset divided by the same statistic on the training set, so
// the training set itself normalizes to exactly 1. Throws DataError when the
// training MAE is zero (degenerate model).
NormalizedErrors normalized_errors(const ErrorProfile& profile_train,
                                   const ErrorProfile& profile_other);

// Generate-and-test percentile search: for each candidate n, build the
// threshold from `calibration_normal`, classify the labeled calibration
// samples, and score with the macro-average of the two class F-scores.
// Returns the maximizing threshold; ties break toward larger n. Throws
// DataError when candidates are empty or the labeled set lacks a class.
Threshold search_percentile(const std::vector<Real>& calibration_normal,
                            const std::vector<ErrorSample>& calibration_labeled,
                            const std::vector<int>& candidates);

// Convenience overload that scores the labeled records with the model first.
Threshold search_percentile(const AutoencoderModel<Real>& model,
                            const ErrorProfile& calibration_normal,
                            const std::vector<TelemetryRecord>& calibration_labeled,
                            const std::vector<int>& candidates);

struct EvalOptions {
    std::vector<int> candidates{90, 91, 92, 93, 94, 95, 96, 97, 98, 99};
    // Default protocol: thresholds come from the training-set error
    // distribution and the percentile search runs on a held-out calibration
    // slice (calibration_fraction of each test split); final metrics use the
    // remaining records. The paper protocol instead pools training and
    // normal-test errors for thresholds and both searches and scores on the
    // full test sets.
    bool paper_protocol = false;
    Real calibration_fraction = 0.2;
    std::uint64_t seed = 0;
};

// Per-class F-scores at one fixed display percentile.
struct PercentileScore {
    int n = 0;
    Real f_normal = 0;
    Real f_anomaly = 0;
};

struct NodeReport {
    std::string node_id;
    Threshold threshold;
    Confusion confusion;
    Real f_normal = 0;
    Real f_anomaly = 0;
    bool f_anomaly_defined = false;
    // F-scores at the 95th/97th/99th percentiles for the tabular report,
    // regardless of the searched threshold.
    std::vector<PercentileScore> table_scores;

    Real train_mae = 0;
    Real train_rmse = 0;
    // Normalized statistics over the full test splits. Per-type values are
    // NaN when the node saw no records of that type.
    NormalizedErrors test_normal;
    NormalizedErrors test_anomaly;
    NormalizedErrors powersave;
    NormalizedErrors performance;

    std::size_t n_train = 0;
    std::size_t n_test_normal = 0;
    std::size_t n_test_anomaly = 0;
    std::size_t n_scored = 0;  // records entering the confusion matrix
};

struct FleetAverages {
    Real f_normal = 0;
    Real f_anomaly = 0;
    Real mae_test_normal = 0;
    Real rmse_test_normal = 0;
    Real mae_test_anomaly = 0;
    Real rmse_test_anomaly = 0;
    Real mae_powersave = 0;
    Real rmse_powersave = 0;
    Real mae_performance = 0;
    Real rmse_performance = 0;
    Real best_percentile = 0;  // mean selected n over nodes
};

struct DetectionReport {
    std::vector<NodeReport> per_node;
    FleetAverages fleet;
    bool paper_protocol = false;
    std::vector<int> candidates;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
    // Protocol notes recorded with every report (calibration scheme, RMSE
    // definition).
    std::vector<std::string> notes;
};

// Holds the scored profiles for one node; produced by the pipeline so the
// expensive forward passes run once.
struct NodeProfiles {
    std::string node_id;
    ErrorProfile train;
    ErrorProfile test_normal;
    ErrorProfile test_anomaly;
};

// Runs threshold calibration and fills the per-node and fleet metrics from
// precomputed error profiles.
DetectionReport evaluate(const std::vector<NodeProfiles>& profiles, const EvalOptions& opts);

// Scores every split of every dataset with its node's model (datasets must
// be normalized with each model's own parameters) and evaluates. Throws
// DataError when a dataset has no matching model.
DetectionReport evaluate(const std::vector<AutoencoderModel<Real>>& models,
                         const std::vector<NodeDataset>& datasets, const EvalOptions& opts);

}  // namespace aedet
