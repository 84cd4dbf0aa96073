#include "aedet/pipeline.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "aedet/csv.hpp"
#include "aedet/errors.hpp"
#include "aedet/model_io.hpp"
#include "aedet/rng.hpp"
#include "aedet/version.hpp"

namespace aedet {

namespace {

using nlohmann::json;

void append_double(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["features"] = cfg.features;
    j["nodes"] = cfg.nodes;
    j["horizon"] = cfg.horizon;
    j["anomaly_fraction"] = cfg.anomaly_fraction;
    j["train_fraction"] = cfg.train_fraction;
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"learning_rate", cfg.train.learning_rate},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_epsilon", cfg.train.adam_epsilon},
                  {"l1_lambda", cfg.train.l1_lambda}};
    j["percentiles"] = cfg.percentiles;
    j["paper_protocol"] = cfg.paper_protocol;
    j["calibration_fraction"] = cfg.calibration_fraction;
    j["jobs"] = cfg.jobs;
    j["out_dir"] = cfg.out_dir.string();
    if (!cfg.model_path.empty()) j["model_path"] = cfg.model_path.string();
    if (!cfg.input_path.empty()) j["input_path"] = cfg.input_path.string();
    return j;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    RunConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.features = j.value("features", cfg.features);
        cfg.nodes = j.value("nodes", cfg.nodes);
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.anomaly_fraction = j.value("anomaly_fraction", cfg.anomaly_fraction);
        cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
        if (j.contains("train")) {
            const json& t = j["train"];
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.adam_beta1 = t.value("adam_beta1", cfg.train.adam_beta1);
            cfg.train.adam_beta2 = t.value("adam_beta2", cfg.train.adam_beta2);
            cfg.train.adam_epsilon = t.value("adam_epsilon", cfg.train.adam_epsilon);
            cfg.train.l1_lambda = t.value("l1_lambda", cfg.train.l1_lambda);
        }
        if (j.contains("percentiles"))
            cfg.percentiles = j["percentiles"].get<std::vector<int>>();
        cfg.paper_protocol = j.value("paper_protocol", cfg.paper_protocol);
        cfg.calibration_fraction = j.value("calibration_fraction", cfg.calibration_fraction);
        cfg.jobs = j.value("jobs", cfg.jobs);
        if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("model_path")) cfg.model_path = j["model_path"].get<std::string>();
        if (j.contains("input_path")) cfg.input_path = j["input_path"].get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    if (cfg.features < 1 || cfg.nodes < 1 || cfg.horizon < 1)
        throw ConfigError("config: features, nodes and horizon must be positive");
    if (cfg.train.epochs < 1 || cfg.train.batch_size < 1 || cfg.train.learning_rate <= 0 ||
        cfg.train.l1_lambda < 0)
        throw ConfigError("config: invalid training hyperparameters");
    for (const int n : cfg.percentiles)
        if (n < 1 || n > 99) throw ConfigError("config: percentiles must be in [1, 99]");
    if (cfg.percentiles.empty()) throw ConfigError("config: empty percentile list");
    return cfg;
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config " + path.string());
    out << config_to_json(cfg).dump(2) << '\n';
}

std::string config_json(const RunConfig& cfg) { return config_to_json(cfg).dump(); }

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string text = config_json(cfg);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::vector<int> parse_percentiles(const std::string& text) {
    std::vector<int> out;
    auto parse_int = [&](const std::string& s) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw ConfigError("bad percentile '" + s + "'");
        return v;
    };
    const auto range = text.find("..");
    if (range != std::string::npos) {
        const int lo = parse_int(text.substr(0, range));
        const int hi = parse_int(text.substr(range + 2));
        if (lo > hi) throw ConfigError("empty percentile range '" + text + "'");
        for (int n = lo; n <= hi; ++n) out.push_back(n);
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            const auto end = comma == std::string::npos ? text.size() : comma;
            out.push_back(parse_int(text.substr(start, end - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    for (const int n : out)
        if (n < 1 || n > 99) throw ConfigError("percentiles must be in [1, 99]");
    if (out.empty()) throw ConfigError("empty percentile list");
    return out;
}

std::uint64_t node_seed(std::uint64_t master_seed, const std::string& node_id) {
    return derive_seed(master_seed, node_id);
}

FleetSummary run_synth(const RunConfig& cfg) {
    if (cfg.features < 8) throw ConfigError("synth: need at least 8 features");
    FleetSpec spec;
    spec.node_count = cfg.nodes;
    spec.features = cfg.features;
    spec.horizon = cfg.horizon;
    spec.mix.anomaly_fraction = cfg.anomaly_fraction;
    spec.seed = cfg.seed;
    return generate_fleet(spec, cfg.data_dir());
}

namespace {

NodeDataset build_dataset(const std::string& node_id,
                          const std::vector<std::string>& feature_names,
                          const std::vector<TelemetryRecord>& records, Real train_fraction,
                          std::uint64_t split_seed) {
    SplitSpec split;
    split.train_fraction = train_fraction;
    split.rng_seed = split_seed;
    return make_node_dataset(node_id, feature_names, records, split);
}

}  // namespace

std::vector<NodeDataset> load_fleet(const RunConfig& cfg) {
    const IngestResult ingested = ingest_dir(cfg.data_dir());
    std::vector<NodeDataset> datasets;
    for (const auto& [node_id, records] : ingested.by_node) {
        const std::uint64_t nseed = node_seed(cfg.seed, node_id);
        datasets.push_back(build_dataset(node_id, ingested.feature_names, records,
                                         cfg.train_fraction, derive_seed(nseed, "split")));
    }
    return datasets;
}

namespace {

// Runs fn(i) for i in [0, count) on a small worker pool. Exceptions are
// captured and rethrown on the caller thread.
void parallel_for_nodes(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(count, jobs > 0 ? static_cast<std::size_t>(jobs) : hw);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<Real>& losses) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch,loss\n";
    std::string line;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        line.clear();
        line += std::to_string(i + 1);
        line += ',';
        append_double(line, losses[i]);
        line += '\n';
        out << line;
    }
}

}  // namespace

std::vector<TrainedNode> run_train(const RunConfig& cfg) {
    const std::vector<NodeDataset> datasets = load_fleet(cfg);
    std::filesystem::create_directories(cfg.model_dir());

    std::vector<TrainedNode> trained(datasets.size());
    parallel_for_nodes(datasets.size(), cfg.jobs, [&](std::size_t i) {
        const NodeDataset& raw = datasets[i];
        const auto start = std::chrono::steady_clock::now();

        const NormalizationParams params = fit_normalization(raw.train, raw.feature_names);
        const NodeDataset normalized = normalize_dataset(raw, params);

        TrainConfig tc = cfg.train;
        tc.rng_seed = node_seed(cfg.seed, raw.node_id);
        TrainResult<Real> result = train(normalized, tc);
        result.model.norm = params;

        save_model(result.model, cfg.model_dir() / (raw.node_id + ".json"));
        write_curve_csv(cfg.model_dir() / (raw.node_id + "_curve.csv"), result.epoch_loss);

        trained[i].model = std::move(result.model);
        trained[i].epoch_loss = std::move(result.epoch_loss);
        trained[i].wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return trained;
}

namespace {

std::vector<AutoencoderModel<Real>> load_models(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    if (files.empty()) throw DataError("no model files in " + dir.string());
    std::sort(files.begin(), files.end());
    std::vector<AutoencoderModel<Real>> models;
    models.reserve(files.size());
    for (const auto& f : files) models.push_back(load_model(f));
    return models;
}

void write_trend_csv(const std::filesystem::path& path, const NodeProfiles& p) {
    std::vector<const ErrorSample*> all;
    for (const auto* profile : {&p.train, &p.test_normal, &p.test_anomaly})
        for (const auto& s : profile->errors) all.push_back(&s);
    std::sort(all.begin(), all.end(), [](const ErrorSample* a, const ErrorSample* b) {
        return a->timestamp < b->timestamp;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "timestamp,error,label\n";
    std::string line;
    for (const auto* s : all) {
        line.clear();
        line += std::to_string(s->timestamp);
        line += ',';
        append_double(line, s->error);
        line += ',';
        line += to_string(s->label);
        line += '\n';
        out << line;
    }
}

void write_histogram_csv(const std::filesystem::path& path, const NodeProfiles& p) {
    // Normal histogram pools training and normal-test errors, matching the
    // error-distribution plots the thresholds are read from.
    std::vector<Real> normal;
    for (const auto& s : p.train.errors) normal.push_back(s.error);
    for (const auto& s : p.test_normal.errors) normal.push_back(s.error);
    std::vector<Real> anomaly;
    for (const auto& s : p.test_anomaly.errors) anomaly.push_back(s.error);

    Real hi = 0;
    for (const Real e : normal) hi = std::max(hi, e);
    for (const Real e : anomaly) hi = std::max(hi, e);
    if (hi <= 0) hi = 1;
    constexpr int kBins = 60;
    const Real width = hi / kBins;

    std::vector<std::size_t> count_normal(kBins, 0);
    std::vector<std::size_t> count_anomaly(kBins, 0);
    auto bin_of = [&](Real e) {
        return std::min<int>(kBins - 1, static_cast<int>(e / width));
    };
    for (const Real e : normal) count_normal[static_cast<std::size_t>(bin_of(e))] += 1;
    for (const Real e : anomaly) count_anomaly[static_cast<std::size_t>(bin_of(e))] += 1;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "bin_left,bin_right,count_normal,count_anomaly\n";
    std::string line;
    for (int b = 0; b < kBins; ++b) {
        line.clear();
        append_double(line, b * width);
        line += ',';
        append_double(line, (b + 1) * width);
        line += ',';
        line += std::to_string(count_normal[static_cast<std::size_t>(b)]);
        line += ',';
        line += std::to_string(count_anomaly[static_cast<std::size_t>(b)]);
        line += '\n';
        out << line;
    }
}

json normalized_to_json(const NormalizedErrors& e) {
    json j;
    j["mae"] = e.mae;
    j["rmse"] = e.rmse;
    return j;
}

}  // namespace

std::string report_json(const DetectionReport& report, std::uint64_t cfg_hash) {
    json j;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(cfg_hash));
    j["metadata"] = {{"tool_version", kVersion},
                     {"config_hash", hash_hex},
                     {"seed", report.seed},
                     {"paper_protocol", report.paper_protocol},
                     {"percentile_candidates", report.candidates},
                     {"notes", report.notes},
                     {"warnings", report.warnings}};
    j["fleet"] = {{"f_normal", report.fleet.f_normal},
                  {"f_anomaly", report.fleet.f_anomaly},
                  {"normalized_mae_test_normal", report.fleet.mae_test_normal},
                  {"normalized_rmse_test_normal", report.fleet.rmse_test_normal},
                  {"normalized_mae_test_anomaly", report.fleet.mae_test_anomaly},
                  {"normalized_rmse_test_anomaly", report.fleet.rmse_test_anomaly},
                  {"normalized_mae_powersave", report.fleet.mae_powersave},
                  {"normalized_rmse_powersave", report.fleet.rmse_powersave},
                  {"normalized_mae_performance", report.fleet.mae_performance},
                  {"normalized_rmse_performance", report.fleet.rmse_performance},
                  {"mean_selected_percentile", report.fleet.best_percentile}};
    j["nodes"] = json::array();
    for (const auto& n : report.per_node) {
        json nj;
        nj["node_id"] = n.node_id;
        nj["threshold"] = {{"theta", n.threshold.theta},
                           {"percentile_n", n.threshold.percentile_n},
                           {"calibrated_on", n.threshold.calibrated_on}};
        nj["confusion"] = {{"tp", n.confusion.tp},
                           {"fp", n.confusion.fp},
                           {"tn", n.confusion.tn},
                           {"fn", n.confusion.fn}};
        nj["f_normal"] = n.f_normal;
        nj["f_anomaly"] = n.f_anomaly;
        nj["train_mae"] = n.train_mae;
        nj["train_rmse"] = n.train_rmse;
        nj["normalized"] = {{"test_normal", normalized_to_json(n.test_normal)},
                            {"test_anomaly", normalized_to_json(n.test_anomaly)},
                            {"powersave", normalized_to_json(n.powersave)},
                            {"performance", normalized_to_json(n.performance)}};
        nj["counts"] = {{"train", n.n_train},
                        {"test_normal", n.n_test_normal},
                        {"test_anomaly", n.n_test_anomaly},
                        {"scored", n.n_scored}};
        json scores = json::array();
        for (const auto& s : n.table_scores)
            scores.push_back({{"n", s.n}, {"f_normal", s.f_normal}, {"f_anomaly", s.f_anomaly}});
        nj["percentile_scores"] = scores;
        j["nodes"].push_back(nj);
    }
    return j.dump(2) + "\n";
}

void write_report_files(const DetectionReport& report, const std::vector<NodeProfiles>& profiles,
                        std::uint64_t cfg_hash, const std::filesystem::path& report_dir) {
    std::filesystem::create_directories(report_dir);

    {
        std::ofstream out(report_dir / "report.json", std::ios::binary);
        if (!out) throw DataError("cannot write report.json");
        out << report_json(report, cfg_hash);
    }

    {
        std::ofstream out(report_dir / "table1.csv", std::ios::binary);
        if (!out) throw DataError("cannot write table1.csv");
        out << "metric,test_normal,test_anomaly\n";
        std::string line = "normalized_mae,";
        append_double(line, report.fleet.mae_test_normal);
        line += ',';
        append_double(line, report.fleet.mae_test_anomaly);
        line += "\nnormalized_rmse,";
        append_double(line, report.fleet.rmse_test_normal);
        line += ',';
        append_double(line, report.fleet.rmse_test_anomaly);
        line += '\n';
        out << line;
    }

    {
        std::ofstream out(report_dir / "table2.csv", std::ios::binary);
        if (!out) throw DataError("cannot write table2.csv");
        out << "node,f_normal_95,f_anomaly_95,f_normal_97,f_anomaly_97,"
               "f_normal_99,f_anomaly_99,selected_n\n";
        auto row = [&](const std::string& name, const std::vector<PercentileScore>& scores,
                       const std::string& selected) {
            std::string line = name;
            for (const auto& s : scores) {
                line += ',';
                append_double(line, s.f_normal);
                line += ',';
                append_double(line, s.f_anomaly);
            }
            line += ',';
            line += selected;
            line += '\n';
            out << line;
        };
        std::vector<PercentileScore> avg{{95, 0, 0}, {97, 0, 0}, {99, 0, 0}};
        for (const auto& n : report.per_node) {
            row(n.node_id, n.table_scores, std::to_string(n.threshold.percentile_n));
            for (std::size_t k = 0; k < avg.size() && k < n.table_scores.size(); ++k) {
                avg[k].f_normal += n.table_scores[k].f_normal;
                avg[k].f_anomaly += n.table_scores[k].f_anomaly;
            }
        }
        if (!report.per_node.empty()) {
            const auto count = static_cast<Real>(report.per_node.size());
            for (auto& s : avg) {
                s.f_normal /= count;
                s.f_anomaly /= count;
            }
            char mean_n[32];
            std::snprintf(mean_n, sizeof(mean_n), "%.1f", report.fleet.best_percentile);
            row("average", avg, mean_n);
        }
    }

    for (const auto& p : profiles) {
        write_trend_csv(report_dir / ("errors_" + p.node_id + ".csv"), p);
        write_histogram_csv(report_dir / ("hist_" + p.node_id + ".csv"), p);
    }
}

DetectionReport run_eval(const RunConfig& cfg) {
    const std::vector<AutoencoderModel<Real>> models = load_models(cfg.model_dir());
    const IngestResult ingested = ingest_dir(cfg.data_dir());

    std::vector<NodeProfiles> profiles(models.size());
    parallel_for_nodes(models.size(), cfg.jobs, [&](std::size_t i) {
        const AutoencoderModel<Real>& model = models[i];
        const auto it = ingested.by_node.find(model.node_id);
        if (it == ingested.by_node.end())
            throw DataError("eval: no telemetry for node " + model.node_id);

        // The split is reconstructed from the seed stored in the model, so a
        // mismatched --seed cannot silently leak test records into the
        // training profile.
        const NodeDataset raw =
            build_dataset(model.node_id, ingested.feature_names, it->second, cfg.train_fraction,
                          derive_seed(model.hyper.rng_seed, "split"));
        if (raw.feature_count() != model.feature_count())
            throw DataError("eval: dataset width does not match model for node " + model.node_id);
        const NodeDataset ds = normalize_dataset(raw, model.norm);

        NodeProfiles p;
        p.node_id = model.node_id;
        p.train = profile_errors(model, ds.train, "train");
        p.test_normal = profile_errors(model, ds.test_normal, "test_normal");
        p.test_anomaly = profile_errors(model, ds.test_anomaly, "test_anomaly");

        // Integrity check: the recomputed training error must reproduce the
        // value stored at training time, otherwise data and model disagree.
        if (std::abs(p.train.mean() - model.train_mae) >
            1e-9 * std::max<Real>(1, std::abs(model.train_mae)))
            throw DataError("eval: recomputed training error does not match model train_mae for "
                            "node " + model.node_id + " (wrong data or train_fraction?)");
        profiles[i] = std::move(p);
    });

    EvalOptions opts;
    opts.candidates = cfg.percentiles;
    opts.paper_protocol = cfg.paper_protocol;
    opts.calibration_fraction = cfg.calibration_fraction;
    opts.seed = cfg.seed;
    DetectionReport report = evaluate(profiles, opts);
    write_report_files(report, profiles, config_hash(cfg), cfg.report_dir());
    return report;
}

std::size_t run_score(const RunConfig& cfg) {
    if (cfg.model_path.empty() || cfg.input_path.empty())
        throw ConfigError("score: --model and --data are required");
    const AutoencoderModel<Real> model = load_model(cfg.model_path);
    const IngestResult ingested = ingest(cfg.input_path);
    const auto it = ingested.by_node.find(model.node_id);
    if (it == ingested.by_node.end())
        throw DataError("score: input has no records for node " + model.node_id);
    if (static_cast<Index>(ingested.feature_names.size()) != model.feature_count())
        throw DataError("score: input width does not match model");

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path out_path = cfg.out_dir / (model.node_id + "_scores.csv");
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + out_path.string());
    out << "timestamp,node_id,idle,label,error\n";

    std::string line;
    for (const auto& rec : it->second) {
        const TelemetryRecord normalized = apply_normalization(rec, model.norm);
        const Real error = reconstruction_error(model, normalized.features);
        line.clear();
        line += std::to_string(rec.timestamp);
        line += ',';
        line += rec.node_id;
        line += ',';
        line += rec.idle ? '1' : '0';
        line += ',';
        line += to_string(rec.label);
        line += ',';
        append_double(line, error);
        line += '\n';
        out << line;
    }
    return it->second.size();
}

}  // namespace aedet
