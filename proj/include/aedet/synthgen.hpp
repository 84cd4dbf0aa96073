#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aedet/telemetry.hpp"
#include "aedet/types.hpp"

namespace aedet {

// Generative constants for one synthetic node. The telemetry model couples
// load, DVFS frequency, power, temperature and fan speed the way a healthy
// node couples them; governor misconfigurations break exactly those
// couplings. None of this aims to be a faithful power model of any real
// machine; it only carries the correlation structure the detector learns.
struct NodeProfile {
    std::string node_id = "node00";
    int core_count = 4;
    Real f_min = 1.2;  // GHz
    Real f_max = 3.6;
    Real p_idle = 40.0;          // W
    Real c_dyn = 22.0;           // dynamic power coefficient, W / (load * GHz^2)
    Real thermal_gain = 0.15;    // degC per W
    Real thermal_inertia = 0.3;  // beta in (0,1), per-interval lag
    Real t_ambient = 25.0;       // degC
    Real noise_sigma = 0.02;     // measurement noise, fraction of a family's span

    // Load process: alternating busy/idle phases with geometric lengths,
    // busy load following a clipped Gaussian walk around a per-phase level.
    Real mean_phase_len = 24.0;  // intervals, busy and idle alike
    Real load_level_min = 0.5;
    Real load_level_max = 1.0;
    Real load_walk_sigma = 0.05;
};

enum class Governor {
    Conservative,  // load-following, the healthy default
    Powersave,     // pinned to f_min
    Performance,   // pinned to f_max
};

std::string to_string(Governor g);
Label label_for(Governor g);

// Half-open interval [begin, end) of 5-minute slots running one policy.
struct GovernorSegment {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    Governor policy = Governor::Conservative;
};

// Per-interval policy and idleness over the whole horizon. Segments must be
// non-overlapping, ordered and covering; the idle flags have one entry per
// interval.
struct GovernorSchedule {
    std::vector<GovernorSegment> segments;
    std::vector<bool> idle;

    std::int64_t horizon() const { return static_cast<std::int64_t>(idle.size()); }
    Governor policy_at(std::int64_t t) const;
};

// Throws DataError if the segments overlap, leave gaps, or disagree with the
// idle-flag horizon.
void validate_schedule(const GovernorSchedule& schedule);

// Draws alternating busy/idle phases (geometric lengths, mean
// profile.mean_phase_len) for the horizon.
std::vector<bool> make_idle_flags(std::int64_t horizon, const NodeProfile& profile,
                                  std::uint64_t seed);

// Builds a schedule that is conservative except for contiguous multi-day
// anomaly blocks totalling round(anomaly_fraction * horizon) intervals,
// split between powersave and performance blocks by powersave_share.
GovernorSchedule make_schedule(std::int64_t horizon, Real anomaly_fraction, Real powersave_share,
                               const NodeProfile& profile, std::uint64_t seed);

// Simulates one node over the horizon, one record per 5-minute interval.
// The load trace depends only on (profile, schedule idle flags, seed), never
// on the governor, so runs that differ only in policy share the same load.
// Feature layout: the (load, freq, power, temp, fan) tuple replicated per
// core with i.i.d. Gaussian measurement noise until min(F, 5*core_count)
// slots are filled; the remaining features are uninformative uniform noise
// in [0, 1].
std::vector<TelemetryRecord> generate_node(const NodeProfile& profile,
                                           const GovernorSchedule& schedule,
                                           std::int64_t horizon, Index features,
                                           std::uint64_t seed,
                                           std::int64_t base_timestamp = 0);

// Feature names matching the generate_node layout.
std::vector<std::string> feature_names_for(Index features, int core_count);

// Fleet composition: which fraction of intervals is anomalous and how the
// anomaly types are mixed across the two node groups (powersave-heavy and
// performance-heavy).
struct FleetMix {
    Real anomaly_fraction = 0.2;
    Real powersave_node_fraction = 0.5;   // share of nodes that are powersave-heavy
    Real powersave_share_heavy = 0.75;    // powersave share of anomaly intervals on those nodes
    Real powersave_share_light = 0.3;     // ... on performance-heavy nodes
};

struct FleetSpec {
    int node_count = 8;
    Index features = 32;
    std::int64_t horizon = 23904;  // 83 days of 5-minute intervals
    FleetMix mix;
    std::uint64_t seed = 42;
    std::int64_t base_timestamp = 1735689600;  // 2025-01-01T00:00:00Z
    NodeProfile base_profile;                  // node_id is overridden per node
};

struct NodeSummary {
    std::string node_id;
    std::size_t records = 0;
    std::size_t normal = 0;
    std::size_t powersave = 0;
    std::size_t performance = 0;
    std::size_t idle = 0;
    std::filesystem::path csv_path;
};

struct FleetSummary {
    std::vector<NodeSummary> nodes;
    std::filesystem::path manifest_path;
};

// Writes one CSV per node plus a manifest JSON recording profiles, schedules
// and seeds for exact replay. Deterministic per seed, byte for byte.
FleetSummary generate_fleet(const FleetSpec& spec, const std::filesystem::path& out_dir);

}  // namespace aedet
