#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "aedet/errors.hpp"
#include "aedet/pipeline.hpp"
#include "aedet/version.hpp"

namespace {

using namespace aedet;

// Exit codes: 0 success, 1 I/O or unexpected error, 2 config error,
// 3 data error, 4 training divergence.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct CliOptions {
    std::string config_path;
    std::string percentiles_text;
    RunConfig cfg;
};

// Registers the shared flags on a subcommand; returns the option pointers so
// explicit flags can override config-file values after parsing.
struct SharedFlags {
    CLI::Option* config = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* features = nullptr;
    CLI::Option* nodes = nullptr;
    CLI::Option* horizon = nullptr;
    CLI::Option* epochs = nullptr;
    CLI::Option* batch_size = nullptr;
    CLI::Option* percentiles = nullptr;
    CLI::Option* paper_protocol = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* jobs = nullptr;
    CLI::Option* anomaly_fraction = nullptr;
    CLI::Option* learning_rate = nullptr;
    CLI::Option* l1_lambda = nullptr;
};

struct FlagValues {
    std::string config_path;
    std::uint64_t seed = 0;
    int features = 0;
    int nodes = 0;
    std::int64_t horizon = 0;
    int epochs = 0;
    int batch_size = 0;
    std::string percentiles;
    bool paper_protocol = false;
    std::string out;
    int jobs = 0;
    double anomaly_fraction = 0;
    double learning_rate = 0;
    double l1_lambda = 0;
};

SharedFlags add_shared_flags(CLI::App* cmd, FlagValues& v) {
    SharedFlags f;
    f.config = cmd->add_option("--config", v.config_path, "JSON config file (flags override it)");
    f.seed = cmd->add_option("--seed", v.seed, "master RNG seed");
    f.features = cmd->add_option("--features", v.features, "feature count F");
    f.nodes = cmd->add_option("--nodes", v.nodes, "number of nodes");
    f.horizon = cmd->add_option("--horizon", v.horizon, "intervals per node (synth)");
    f.epochs = cmd->add_option("--epochs", v.epochs, "training epochs");
    f.batch_size = cmd->add_option("--batch-size", v.batch_size, "minibatch size");
    f.percentiles =
        cmd->add_option("--percentiles", v.percentiles, "candidates, e.g. 90..99 or 90,95,97");
    f.paper_protocol = cmd->add_flag("--paper-protocol", v.paper_protocol,
                                     "calibrate thresholds on pooled train+test_normal errors "
                                     "and score the full test sets");
    f.out = cmd->add_option("--out", v.out, "output directory");
    f.jobs = cmd->add_option("--jobs", v.jobs, "worker threads for per-node work (0 = auto)");
    f.anomaly_fraction =
        cmd->add_option("--anomaly-fraction", v.anomaly_fraction, "anomalous interval fraction");
    return f;
}

RunConfig resolve_config(const SharedFlags& f, const FlagValues& v) {
    RunConfig cfg;
    if (f.config->count()) cfg = load_config(v.config_path);
    if (f.seed->count()) cfg.seed = v.seed;
    if (f.features->count()) cfg.features = v.features;
    if (f.nodes->count()) cfg.nodes = v.nodes;
    if (f.horizon->count()) cfg.horizon = v.horizon;
    if (f.epochs->count()) cfg.train.epochs = v.epochs;
    if (f.batch_size->count()) cfg.train.batch_size = v.batch_size;
    if (f.percentiles->count()) cfg.percentiles = parse_percentiles(v.percentiles);
    if (f.paper_protocol->count()) cfg.paper_protocol = v.paper_protocol;
    if (f.out->count()) cfg.out_dir = v.out;
    if (f.jobs->count()) cfg.jobs = v.jobs;
    if (f.anomaly_fraction->count()) cfg.anomaly_fraction = v.anomaly_fraction;

    if (cfg.train.epochs < 1 || cfg.train.batch_size < 1)
        throw ConfigError("epochs and batch size must be positive");
    if (cfg.features < 1 || cfg.nodes < 1 || cfg.horizon < 1)
        throw ConfigError("features, nodes and horizon must be positive");
    return cfg;
}

int do_synth(const RunConfig& cfg) {
    const FleetSummary summary = run_synth(cfg);
    std::printf("wrote %zu node CSVs under %s\n", summary.nodes.size(),
                cfg.data_dir().string().c_str());
    for (const auto& n : summary.nodes)
        std::printf("  %s: %zu records (%zu normal, %zu powersave, %zu performance, %zu idle)\n",
                    n.node_id.c_str(), n.records, n.normal, n.powersave, n.performance, n.idle);
    std::printf("manifest: %s\n", summary.manifest_path.string().c_str());
    return kExitOk;
}

int do_train(const RunConfig& cfg) {
    const auto trained = run_train(cfg);
    for (const auto& t : trained)
        std::printf("trained %s in %.1f s (final loss %.6f, train MAE %.6f)\n",
                    t.model.node_id.c_str(), t.wall_seconds,
                    t.epoch_loss.empty() ? 0.0 : t.epoch_loss.back(),
                    static_cast<double>(t.model.train_mae));
    std::printf("models written to %s\n", cfg.model_dir().string().c_str());
    return kExitOk;
}

int do_eval(const RunConfig& cfg) {
    const DetectionReport report = run_eval(cfg);
    std::printf("node        n   theta      F_N    F_A    nMAE_N  nMAE_A\n");
    for (const auto& n : report.per_node)
        std::printf("%-10s %3d  %.6f  %.3f  %.3f  %.3f  %.3f\n", n.node_id.c_str(),
                    n.threshold.percentile_n, n.threshold.theta, n.f_normal, n.f_anomaly,
                    n.test_normal.mae, n.test_anomaly.mae);
    std::printf("fleet       %3.0f             %.3f  %.3f  %.3f  %.3f\n",
                report.fleet.best_percentile, report.fleet.f_normal, report.fleet.f_anomaly,
                report.fleet.mae_test_normal, report.fleet.mae_test_anomaly);
    for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());
    std::printf("report written to %s\n", cfg.report_dir().string().c_str());
    return kExitOk;
}

int do_score(const RunConfig& cfg) {
    const std::size_t scored = run_score(cfg);
    std::printf("scored %zu records, output under %s\n", scored, cfg.out_dir.string().c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-node autoencoder anomaly detection for HPC telemetry"};
    app.set_version_flag("--version", aedet::kVersion);
    app.require_subcommand(1);

    FlagValues synth_v, train_v, eval_v, score_v;
    auto* synth = app.add_subcommand("synth", "generate a synthetic telemetry fleet");
    const SharedFlags synth_f = add_shared_flags(synth, synth_v);
    auto* train = app.add_subcommand("train", "train one autoencoder per node");
    const SharedFlags train_f = add_shared_flags(train, train_v);
    auto* eval = app.add_subcommand("eval", "calibrate thresholds and write the report");
    const SharedFlags eval_f = add_shared_flags(eval, eval_v);
    auto* score = app.add_subcommand("score", "apply a saved model to a telemetry CSV");
    const SharedFlags score_f = add_shared_flags(score, score_v);
    std::string model_path, data_path;
    score->add_option("--model", model_path, "model JSON file")->required();
    score->add_option("--data", data_path, "telemetry CSV to score")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return do_synth(resolve_config(synth_f, synth_v));
        if (train->parsed()) return do_train(resolve_config(train_f, train_v));
        if (eval->parsed()) return do_eval(resolve_config(eval_f, eval_v));
        if (score->parsed()) {
            RunConfig cfg = resolve_config(score_f, score_v);
            cfg.model_path = model_path;
            cfg.input_path = data_path;
            return do_score(cfg);
        }
    } catch (const aedet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const aedet::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return kExitDivergence;
    } catch (const aedet::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return kExitOther;
}
