#include "aedet/detector.hpp"

#include <cmath>
#include <numeric>

#include "aedet/rng.hpp"

namespace aedet {

std::vector<Real> ErrorProfile::values() const {
    std::vector<Real> out;
    out.reserve(errors.size());
    for (const auto& e : errors) out.push_back(e.error);
    return out;
}

Real ErrorProfile::mean() const {
    if (errors.empty()) return 0;
    Real sum = 0;
    for (const auto& e : errors) sum += e.error;
    return sum / static_cast<Real>(errors.size());
}

Real ErrorProfile::rms() const {
    if (errors.empty()) return 0;
    Real sum = 0;
    for (const auto& e : errors) sum += e.error * e.error;
    return std::sqrt(sum / static_cast<Real>(errors.size()));
}

ErrorProfile profile_errors(const AutoencoderModel<Real>& model,
                            const std::vector<TelemetryRecord>& records,
                            const std::string& source) {
    ErrorProfile profile;
    profile.source = source;
    if (records.empty()) return profile;

    const Matrix x = pack_features(records, model.feature_count());
    const std::vector<Real> errors = reconstruction_errors(model, x);
    profile.errors.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        profile.errors.push_back(
            {records[i].node_id, records[i].timestamp, errors[i], records[i].label});
    return profile;
}

Threshold make_threshold(const std::vector<Real>& errors, int n) {
    return Threshold{percentile(errors, n), n, errors.size()};
}

void Confusion::add(bool predicted_anomaly, bool truly_anomaly) {
    if (predicted_anomaly)
        (truly_anomaly ? tp : fp) += 1;
    else
        (truly_anomaly ? fn : tn) += 1;
}

Real f_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp + fp + fn == 0) return 0;  // no relevant records at all
    const Real precision = tp + fp ? static_cast<Real>(tp) / static_cast<Real>(tp + fp) : 0;
    const Real recall = tp + fn ? static_cast<Real>(tp) / static_cast<Real>(tp + fn) : 0;
    if (precision + recall == 0) return 0;
    return 2 * precision * recall / (precision + recall);
}

Real f_score_anomaly(const Confusion& c) { return f_score(c.tp, c.fp, c.fn); }

// From the normal class's point of view the true positives are the true
// negatives of the anomaly view, and the error roles swap.
Real f_score_normal(const Confusion& c) { return f_score(c.tn, c.fn, c.fp); }

NormalizedErrors normalized_errors(const ErrorProfile& profile_train,
                                   const ErrorProfile& profile_other) {
    const Real train_mae = profile_train.mean();
    const Real train_rms = profile_train.rms();
    if (train_mae <= 0 || train_rms <= 0)
        throw DataError("normalized_errors: zero training error, degenerate model");
    return NormalizedErrors{profile_other.mean() / train_mae, profile_other.rms() / train_rms};
}

Threshold search_percentile(const std::vector<Real>& calibration_normal,
                            const std::vector<ErrorSample>& calibration_labeled,
                            const std::vector<int>& candidates) {
    if (candidates.empty()) throw DataError("search_percentile: no candidates");
    bool has_normal = false;
    bool has_anomaly = false;
    for (const auto& s : calibration_labeled) {
        (is_anomaly(s.label) ? has_anomaly : has_normal) = true;
    }
    if (!has_normal || !has_anomaly)
        throw DataError("search_percentile: calibration set must contain both classes");

    Threshold best;
    Real best_score = -1;
    for (const int n : candidates) {
        const Threshold th = make_threshold(calibration_normal, n);
        Confusion c;
        for (const auto& s : calibration_labeled) c.add(classify(s.error, th), is_anomaly(s.label));
        const Real macro = (f_score_normal(c) + f_score_anomaly(c)) / 2;
        // ties break toward larger n
        if (macro > best_score || (macro == best_score && n > best.percentile_n)) {
            best_score = macro;
            best = th;
        }
    }
    return best;
}

Threshold search_percentile(const AutoencoderModel<Real>& model,
                            const ErrorProfile& calibration_normal,
                            const std::vector<TelemetryRecord>& calibration_labeled,
                            const std::vector<int>& candidates) {
    const ErrorProfile labeled = profile_errors(model, calibration_labeled, "calibration");
    return search_percentile(calibration_normal.values(), labeled.errors, candidates);
}

namespace {

// Seeded index partition into (calibration, evaluation) slices.
std::pair<std::vector<ErrorSample>, std::vector<ErrorSample>> split_samples(
    const std::vector<ErrorSample>& samples, Real fraction, std::uint64_t seed) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_cal = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(samples.size())));
    std::pair<std::vector<ErrorSample>, std::vector<ErrorSample>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_cal ? out.first : out.second).push_back(samples[order[i]]);
    return out;
}

std::vector<ErrorSample> filter_label(const std::vector<ErrorSample>& samples, Label label) {
    std::vector<ErrorSample> out;
    for (const auto& s : samples)
        if (s.label == label) out.push_back(s);
    return out;
}

NormalizedErrors normalized_or_nan(const ErrorProfile& train, const std::vector<ErrorSample>& subset,
                                   const std::string& source) {
    if (subset.empty())
        return NormalizedErrors{std::nan(""), std::nan("")};
    ErrorProfile p;
    p.source = source;
    p.errors = subset;
    return normalized_errors(train, p);
}

}  // namespace

DetectionReport evaluate(const std::vector<NodeProfiles>& profiles, const EvalOptions& opts) {
    DetectionReport report;
    report.paper_protocol = opts.paper_protocol;
    report.candidates = opts.candidates;
    report.seed = opts.seed;
    report.notes.push_back(
        opts.paper_protocol
            ? "calibration: paper protocol, thresholds from train+test_normal errors, "
              "search and metrics on the full test sets"
            : "calibration: thresholds from train errors, percentile search on a held-out "
              "calibration slice of the test sets, metrics on the remainder");
    report.notes.push_back("rmse is the root mean square of per-record errors");

    for (const auto& node : profiles) {
        NodeReport nr;
        nr.node_id = node.node_id;
        nr.n_train = node.train.errors.size();
        nr.n_test_normal = node.test_normal.errors.size();
        nr.n_test_anomaly = node.test_anomaly.errors.size();
        nr.train_mae = node.train.mean();
        nr.train_rmse = node.train.rms();

        nr.test_normal = normalized_or_nan(node.train, node.test_normal.errors, "test_normal");
        nr.test_anomaly = normalized_or_nan(node.train, node.test_anomaly.errors, "test_anomaly");
        nr.powersave = normalized_or_nan(
            node.train, filter_label(node.test_anomaly.errors, Label::AnomalyPowersave),
            "powersave");
        nr.performance = normalized_or_nan(
            node.train, filter_label(node.test_anomaly.errors, Label::AnomalyPerformance),
            "performance");

        // Threshold calibration and classification.
        std::vector<Real> threshold_errors;
        std::vector<ErrorSample> search_set;
        std::vector<ErrorSample> eval_set;
        if (opts.paper_protocol) {
            threshold_errors = node.train.values();
            const std::vector<Real> extra = node.test_normal.values();
            threshold_errors.insert(threshold_errors.end(), extra.begin(), extra.end());
            search_set = node.test_normal.errors;
            search_set.insert(search_set.end(), node.test_anomaly.errors.begin(),
                              node.test_anomaly.errors.end());
            eval_set = search_set;
        } else {
            threshold_errors = node.train.values();
            const std::uint64_t cal_seed = derive_seed(opts.seed, node.node_id + "/calibration");
            auto [cal_n, eval_n] = split_samples(node.test_normal.errors,
                                                 opts.calibration_fraction, cal_seed);
            auto [cal_a, eval_a] = split_samples(node.test_anomaly.errors,
                                                 opts.calibration_fraction,
                                                 derive_seed(cal_seed, "anomaly"));
            search_set = std::move(cal_n);
            search_set.insert(search_set.end(), cal_a.begin(), cal_a.end());
            eval_set = std::move(eval_n);
            eval_set.insert(eval_set.end(), eval_a.begin(), eval_a.end());
        }

        if (node.test_anomaly.errors.empty()) {
            report.warnings.push_back("node " + node.node_id +
                                      ": no anomalous records, threshold falls back to the "
                                      "largest candidate; anomaly-class metrics undefined");
            nr.threshold =
                make_threshold(threshold_errors,
                               *std::max_element(opts.candidates.begin(), opts.candidates.end()));
        } else {
            nr.threshold = search_percentile(threshold_errors, search_set, opts.candidates);
        }

        for (const auto& s : eval_set)
            nr.confusion.add(classify(s.error, nr.threshold), is_anomaly(s.label));
        nr.n_scored = eval_set.size();
        nr.f_normal = f_score_normal(nr.confusion);
        nr.f_anomaly_defined = !node.test_anomaly.errors.empty();
        nr.f_anomaly = nr.f_anomaly_defined ? f_score_anomaly(nr.confusion) : std::nan("");

        for (const int n : {95, 97, 99}) {
            const Threshold th = make_threshold(threshold_errors, n);
            Confusion c;
            for (const auto& s : eval_set) c.add(classify(s.error, th), is_anomaly(s.label));
            nr.table_scores.push_back({n, f_score_normal(c), f_score_anomaly(c)});
        }

        report.per_node.push_back(std::move(nr));
    }

    // Fleet averages: arithmetic means over nodes, NaN entries skipped.
    auto mean_of = [&](auto getter) {
        Real sum = 0;
        std::size_t count = 0;
        for (const auto& nr : report.per_node) {
            const Real v = getter(nr);
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        }
        return count ? sum / static_cast<Real>(count) : std::nan("");
    };
    report.fleet.f_normal = mean_of([](const NodeReport& n) { return n.f_normal; });
    report.fleet.f_anomaly = mean_of([](const NodeReport& n) { return n.f_anomaly; });
    report.fleet.mae_test_normal = mean_of([](const NodeReport& n) { return n.test_normal.mae; });
    report.fleet.rmse_test_normal = mean_of([](const NodeReport& n) { return n.test_normal.rmse; });
    report.fleet.mae_test_anomaly = mean_of([](const NodeReport& n) { return n.test_anomaly.mae; });
    report.fleet.rmse_test_anomaly =
        mean_of([](const NodeReport& n) { return n.test_anomaly.rmse; });
    report.fleet.mae_powersave = mean_of([](const NodeReport& n) { return n.powersave.mae; });
    report.fleet.rmse_powersave = mean_of([](const NodeReport& n) { return n.powersave.rmse; });
    report.fleet.mae_performance = mean_of([](const NodeReport& n) { return n.performance.mae; });
    report.fleet.rmse_performance = mean_of([](const NodeReport& n) { return n.performance.rmse; });
    report.fleet.best_percentile =
        mean_of([](const NodeReport& n) { return static_cast<Real>(n.threshold.percentile_n); });
    return report;
}

DetectionReport evaluate(const std::vector<AutoencoderModel<Real>>& models,
                         const std::vector<NodeDataset>& datasets, const EvalOptions& opts) {
    std::vector<NodeProfiles> profiles;
    profiles.reserve(datasets.size());
    for (const auto& ds : datasets) {
        const AutoencoderModel<Real>* model = nullptr;
        for (const auto& m : models)
            if (m.node_id == ds.node_id) model = &m;
        if (!model) throw DataError("evaluate: no model for node " + ds.node_id);
        NodeProfiles p;
        p.node_id = ds.node_id;
        p.train = profile_errors(*model, ds.train, "train");
        p.test_normal = profile_errors(*model, ds.test_normal, "test_normal");
        p.test_anomaly = profile_errors(*model, ds.test_anomaly, "test_anomaly");
        profiles.push_back(std::move(p));
    }
    return evaluate(profiles, opts);
}

}  // namespace aedet
