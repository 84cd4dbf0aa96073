#include "aedet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "aedet/csv.hpp"
#include "aedet/errors.hpp"
#include "aedet/rng.hpp"

namespace aedet {

std::string to_string(Governor g) {
    switch (g) {
        case Governor::Conservative: return "conservative";
        case Governor::Powersave: return "powersave";
        case Governor::Performance: return "performance";
    }
    return "conservative";
}

Label label_for(Governor g) {
    switch (g) {
        case Governor::Conservative: return Label::Normal;
        case Governor::Powersave: return Label::AnomalyPowersave;
        case Governor::Performance: return Label::AnomalyPerformance;
    }
    return Label::Normal;
}

Governor GovernorSchedule::policy_at(std::int64_t t) const {
    for (const auto& seg : segments)
        if (t >= seg.begin && t < seg.end) return seg.policy;
    throw DataError("schedule: interval " + std::to_string(t) + " not covered by any segment");
}

void validate_schedule(const GovernorSchedule& schedule) {
    const std::int64_t horizon = schedule.horizon();
    if (horizon < 1) throw DataError("schedule: empty horizon");
    if (schedule.segments.empty()) throw DataError("schedule: no segments");
    std::int64_t expected = 0;
    for (const auto& seg : schedule.segments) {
        if (seg.begin != expected)
            throw DataError("schedule: segment starting at " + std::to_string(seg.begin) +
                            " leaves a gap or overlap at " + std::to_string(expected));
        if (seg.end <= seg.begin) throw DataError("schedule: empty or inverted segment");
        expected = seg.end;
    }
    if (expected != horizon)
        throw DataError("schedule: segments cover " + std::to_string(expected) +
                        " intervals, idle flags cover " + std::to_string(horizon));
}

namespace {

// Geometric length with mean 1/p, support {1, 2, ...}.
std::int64_t geometric_length(Rng& rng, double mean) {
    const double p = 1.0 / std::max(1.0, mean);
    const double u = rng.uniform01();
    const auto k = static_cast<std::int64_t>(std::ceil(std::log1p(-u) / std::log1p(-p)));
    return std::max<std::int64_t>(1, k);
}

}  // namespace

std::vector<bool> make_idle_flags(std::int64_t horizon, const NodeProfile& profile,
                                  std::uint64_t seed) {
    std::vector<bool> idle;
    idle.reserve(static_cast<std::size_t>(horizon));
    Rng rng(seed);
    bool phase_idle = false;  // nodes start busy
    while (static_cast<std::int64_t>(idle.size()) < horizon) {
        const std::int64_t len = geometric_length(rng, profile.mean_phase_len);
        for (std::int64_t i = 0; i < len && static_cast<std::int64_t>(idle.size()) < horizon; ++i)
            idle.push_back(phase_idle);
        phase_idle = !phase_idle;
    }
    return idle;
}

GovernorSchedule make_schedule(std::int64_t horizon, Real anomaly_fraction, Real powersave_share,
                               const NodeProfile& profile, std::uint64_t seed) {
    if (horizon < 1) throw DataError("make_schedule: horizon must be >= 1");
    if (anomaly_fraction < 0 || anomaly_fraction >= 1)
        throw DataError("make_schedule: anomaly_fraction must be in [0, 1)");

    GovernorSchedule schedule;
    schedule.idle = make_idle_flags(horizon, profile, derive_seed(seed, "phases"));

    const auto total_anomalous =
        static_cast<std::int64_t>(std::llround(anomaly_fraction * static_cast<double>(horizon)));
    if (total_anomalous == 0) {
        schedule.segments.push_back({0, horizon, Governor::Conservative});
        validate_schedule(schedule);
        return schedule;
    }

    // Contiguous multi-day blocks, nominally ~2.5 days of 5-minute intervals.
    const std::int64_t nominal_block = 720;
    const auto n_blocks = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(total_anomalous) / nominal_block));

    // Block types: powersave_share of the anomalous intervals, at least one
    // block of each type when the share is strictly inside (0, 1) and there
    // are enough blocks. A single block follows the majority share.
    auto n_powersave = static_cast<std::int64_t>(
        std::llround(powersave_share * static_cast<double>(n_blocks)));
    if (n_blocks >= 2) {
        if (powersave_share > 0) n_powersave = std::max<std::int64_t>(1, n_powersave);
        if (powersave_share < 1) n_powersave = std::min(n_blocks - 1, n_powersave);
    } else if (powersave_share >= 0.5) {
        n_powersave = 1;
    }
    n_powersave = std::clamp<std::int64_t>(n_powersave, 0, n_blocks);

    std::vector<Governor> block_types;
    for (std::int64_t i = 0; i < n_blocks; ++i)
        block_types.push_back(i < n_powersave ? Governor::Powersave : Governor::Performance);
    Rng rng(derive_seed(seed, "blocks"));
    rng.shuffle(block_types);

    // One block per equal bay of the horizon, placed at a seeded offset, so
    // the blocks never touch and the anomalous periods spread over the run.
    const std::int64_t bay = horizon / n_blocks;
    std::vector<GovernorSegment> anomalies;
    std::int64_t remaining = total_anomalous;
    for (std::int64_t i = 0; i < n_blocks; ++i) {
        const std::int64_t len =
            std::min(remaining / (n_blocks - i) + ((i < remaining % (n_blocks - i)) ? 1 : 0),
                     bay - 2);
        remaining -= len;
        const std::int64_t slack = bay - len;
        const auto offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(
            std::max<std::int64_t>(1, slack - 1)))) + 1;
        const std::int64_t begin = i * bay + offset;
        anomalies.push_back({begin, begin + len, block_types[static_cast<std::size_t>(i)]});
    }
    if (remaining > 0)
        throw DataError("make_schedule: horizon too short for the requested anomaly fraction");

    std::int64_t cursor = 0;
    for (const auto& block : anomalies) {
        if (block.begin > cursor)
            schedule.segments.push_back({cursor, block.begin, Governor::Conservative});
        schedule.segments.push_back(block);
        cursor = block.end;
    }
    if (cursor < horizon)
        schedule.segments.push_back({cursor, horizon, Governor::Conservative});
    validate_schedule(schedule);
    return schedule;
}

std::vector<std::string> feature_names_for(Index features, int core_count) {
    static const char* kFamilies[5] = {"load", "freq", "power", "temp", "fan"};
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(features));
    const Index informative = std::min<Index>(features, 5 * core_count);
    for (Index slot = 0; slot < informative; ++slot) {
        const Index core = slot / 5;
        names.push_back(std::string(kFamilies[slot % 5]) + "_core" + std::to_string(core));
    }
    for (Index i = informative; i < features; ++i)
        names.push_back("noise_" + std::to_string(i - informative));
    return names;
}

std::vector<TelemetryRecord> generate_node(const NodeProfile& profile,
                                           const GovernorSchedule& schedule,
                                           std::int64_t horizon, Index features,
                                           std::uint64_t seed, std::int64_t base_timestamp) {
    if (features < 8) throw DataError("generate_node: need at least 8 features");
    if (horizon < 1) throw DataError("generate_node: horizon must be >= 1");
    if (schedule.horizon() != horizon)
        throw DataError("generate_node: schedule covers " + std::to_string(schedule.horizon()) +
                        " intervals, expected " + std::to_string(horizon));
    validate_schedule(schedule);
    if (!(profile.f_min < profile.f_max) || profile.thermal_inertia <= 0 ||
        profile.thermal_inertia >= 1 || profile.noise_sigma < 0)
        throw DataError("generate_node: invalid node profile");

    // Independent streams: the load trace and measurement noise never depend
    // on the governor, so paired runs that differ only in policy share them.
    Rng load_rng(derive_seed(seed, "load"));
    Rng noise_rng(derive_seed(seed, "noise"));
    Rng junk_rng(derive_seed(seed, "junk"));

    const Index informative = std::min<Index>(features, 5 * profile.core_count);
    const Real freq_span = profile.f_max - profile.f_min;
    const Real power_span = profile.c_dyn * profile.f_max * profile.f_max;
    const Real family_span[5] = {1.0, freq_span, power_span, profile.thermal_gain * power_span,
                                 80.0};

    std::vector<TelemetryRecord> records;
    records.reserve(static_cast<std::size_t>(horizon));

    Real load = 0;
    Real level = 0;
    Real freq = profile.f_min;
    Real temp = profile.t_ambient + profile.thermal_gain * profile.p_idle;

    for (std::int64_t t = 0; t < horizon; ++t) {
        const bool idle = schedule.idle[static_cast<std::size_t>(t)];
        if (idle) {
            load = 0;
        } else if (t == 0 || schedule.idle[static_cast<std::size_t>(t - 1)]) {
            // busy phase entry: draw the phase level
            level = load_rng.uniform(profile.load_level_min, profile.load_level_max);
            load = level;
        } else {
            // clipped Gaussian walk pulled toward the phase level
            load = std::clamp(load + 0.25 * (level - load) +
                                  load_rng.gaussian(0.0, profile.load_walk_sigma),
                              0.0, 1.0);
        }

        const Governor policy = schedule.policy_at(t);
        switch (policy) {
            case Governor::Conservative:
                freq += 0.5 * ((profile.f_min + freq_span * load) - freq);
                break;
            case Governor::Powersave: freq = profile.f_min; break;
            case Governor::Performance: freq = profile.f_max; break;
        }

        const Real power = profile.p_idle + profile.c_dyn * load * freq * freq;
        temp += profile.thermal_inertia *
                (profile.t_ambient + profile.thermal_gain * power - temp);
        const Real fan = 20.0 + 80.0 * std::clamp((temp - 40.0) / 40.0, 0.0, 1.0);

        TelemetryRecord rec;
        rec.node_id = profile.node_id;
        rec.timestamp = base_timestamp + 300 * t;
        rec.label = label_for(policy);
        rec.idle = idle;
        rec.features.resize(features);

        const Real family_value[5] = {load, freq, power, temp, fan};
        for (Index slot = 0; slot < informative; ++slot) {
            const int family = static_cast<int>(slot % 5);
            rec.features[slot] =
                family_value[family] +
                noise_rng.gaussian(0.0, profile.noise_sigma * family_span[family]);
        }
        for (Index slot = informative; slot < features; ++slot)
            rec.features[slot] = junk_rng.uniform01();

        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

nlohmann::json profile_json(const NodeProfile& p) {
    return nlohmann::json{{"node_id", p.node_id},
                          {"core_count", p.core_count},
                          {"f_min", p.f_min},
                          {"f_max", p.f_max},
                          {"p_idle", p.p_idle},
                          {"c_dyn", p.c_dyn},
                          {"thermal_gain", p.thermal_gain},
                          {"thermal_inertia", p.thermal_inertia},
                          {"t_ambient", p.t_ambient},
                          {"noise_sigma", p.noise_sigma},
                          {"mean_phase_len", p.mean_phase_len},
                          {"load_level_min", p.load_level_min},
                          {"load_level_max", p.load_level_max},
                          {"load_walk_sigma", p.load_walk_sigma}};
}

}  // namespace

FleetSummary generate_fleet(const FleetSpec& spec, const std::filesystem::path& out_dir) {
    if (spec.node_count < 1) throw DataError("generate_fleet: need at least one node");
    std::filesystem::create_directories(out_dir);

    const auto n_heavy = static_cast<int>(
        std::llround(spec.mix.powersave_node_fraction * static_cast<double>(spec.node_count)));

    FleetSummary summary;
    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["seed"] = spec.seed;
    manifest["features"] = spec.features;
    manifest["horizon"] = spec.horizon;
    manifest["base_timestamp"] = spec.base_timestamp;
    manifest["mix"] = {{"anomaly_fraction", spec.mix.anomaly_fraction},
                       {"powersave_node_fraction", spec.mix.powersave_node_fraction},
                       {"powersave_share_heavy", spec.mix.powersave_share_heavy},
                       {"powersave_share_light", spec.mix.powersave_share_light}};
    manifest["nodes"] = nlohmann::json::array();

    const std::vector<std::string> names =
        feature_names_for(spec.features, spec.base_profile.core_count);

    for (int i = 0; i < spec.node_count; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "node%02d", i);
        NodeProfile profile = spec.base_profile;
        profile.node_id = id;

        const std::uint64_t nseed = derive_seed(spec.seed, std::string(id) + "/synth");
        const Real share = i < n_heavy ? spec.mix.powersave_share_heavy
                                       : spec.mix.powersave_share_light;
        const GovernorSchedule schedule = make_schedule(
            spec.horizon, spec.mix.anomaly_fraction, share, profile, derive_seed(nseed, "schedule"));
        const std::vector<TelemetryRecord> records =
            generate_node(profile, schedule, spec.horizon, spec.features,
                          derive_seed(nseed, "telemetry"), spec.base_timestamp);

        NodeSummary ns;
        ns.node_id = id;
        ns.records = records.size();
        for (const auto& r : records) {
            if (r.idle) ++ns.idle;
            if (r.label == Label::Normal) ++ns.normal;
            if (r.label == Label::AnomalyPowersave) ++ns.powersave;
            if (r.label == Label::AnomalyPerformance) ++ns.performance;
        }
        ns.csv_path = out_dir / (std::string(id) + ".csv");
        write_telemetry_csv(ns.csv_path, names, records);

        nlohmann::json node_json;
        node_json["node_id"] = id;
        node_json["seed"] = nseed;
        node_json["powersave_share"] = share;
        node_json["profile"] = profile_json(profile);
        node_json["csv"] = ns.csv_path.filename().string();
        node_json["counts"] = {{"records", ns.records},
                               {"normal", ns.normal},
                               {"powersave", ns.powersave},
                               {"performance", ns.performance},
                               {"idle", ns.idle}};
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& seg : schedule.segments)
            segs.push_back({{"begin", seg.begin}, {"end", seg.end},
                            {"policy", to_string(seg.policy)}});
        node_json["segments"] = segs;
        manifest["nodes"].push_back(node_json);

        summary.nodes.push_back(std::move(ns));
    }

    summary.manifest_path = out_dir / "manifest.json";
    std::ofstream out(summary.manifest_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + summary.manifest_path.string());
    out << manifest.dump(2) << '\n';
    return summary;
}

}  // namespace aedet
