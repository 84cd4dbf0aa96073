#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aedet/autoencoder.hpp"
#include "aedet/detector.hpp"
#include "aedet/synthgen.hpp"
#include "aedet/types.hpp"

namespace aedet {

// Everything a run needs. A RunConfig plus the input files fully determine
// every output byte; all randomness flows from the seed. Serializable to and
// from a JSON config file; command-line flags override file values.
struct RunConfig {
    std::uint64_t seed = 42;
    int features = 32;
    int nodes = 8;
    std::int64_t horizon = 23904;
    Real anomaly_fraction = 0.2;
    Real train_fraction = 0.8;
    TrainConfig train;
    std::vector<int> percentiles{90, 91, 92, 93, 94, 95, 96, 97, 98, 99};
    bool paper_protocol = false;
    Real calibration_fraction = 0.2;
    int jobs = 0;  // worker threads for per-node work; 0 = hardware default
    std::filesystem::path out_dir = "out";

    // score only
    std::filesystem::path model_path;
    std::filesystem::path input_path;

    std::filesystem::path data_dir() const { return out_dir / "data"; }
    std::filesystem::path model_dir() const { return out_dir / "models"; }
    std::filesystem::path report_dir() const { return out_dir / "report"; }
};

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);
std::string config_json(const RunConfig& cfg);

// FNV-1a over the canonical JSON rendering; stamped into reports for
// provenance.
std::uint64_t config_hash(const RunConfig& cfg);

// Parses a percentile candidate list: either "90..99" or "90,93,97".
std::vector<int> parse_percentiles(const std::string& text);

// Per-node seed chain. Every stage derives its stream from the master seed
// and the node id, so per-node work is order independent and reproducible.
std::uint64_t node_seed(std::uint64_t master_seed, const std::string& node_id);

struct TrainedNode {
    AutoencoderModel<Real> model;
    std::vector<Real> epoch_loss;
    double wall_seconds = 0;
};

// synth: generate the fleet CSVs and manifest under cfg.data_dir().
FleetSummary run_synth(const RunConfig& cfg);

// Ingests cfg.data_dir() and builds one raw (unnormalized) NodeDataset per
// node with the config's split settings.
std::vector<NodeDataset> load_fleet(const RunConfig& cfg);

// train: one model per node, fanned out over cfg.jobs workers. Writes
// <model_dir>/<node>.json and <model_dir>/<node>_curve.csv.
std::vector<TrainedNode> run_train(const RunConfig& cfg);

// eval: loads models and data, recomputes the splits from the model seeds,
// scores, calibrates thresholds and writes report.json, table1.csv,
// table2.csv plus per-node error-trend and histogram CSVs.
DetectionReport run_eval(const RunConfig& cfg);

// score: apply a saved model to a telemetry CSV and write one error per
// record of the model's node (idle and unlabeled records included).
std::size_t run_score(const RunConfig& cfg);

// Report serialization, shared by run_eval and the tests.
std::string report_json(const DetectionReport& report, std::uint64_t cfg_hash);
void write_report_files(const DetectionReport& report, const std::vector<NodeProfiles>& profiles,
                        std::uint64_t cfg_hash, const std::filesystem::path& report_dir);

}  // namespace aedet
