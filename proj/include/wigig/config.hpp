#pragma once

#include <map>
#include <string>
#include <vector>

#include "wigig/radiomap.hpp"
#include "wigig/sim/simulation.hpp"

namespace wigig {

/// Fully resolved scenario description: geometry, codebooks, traffic,
/// timing, thresholds, sweep plan. parse_config applies defaults for every
/// omitted field.
struct ScenarioConfig {
    Environment env;
    CodebookLayout codebook;
    std::vector<ApSite> aps;
    std::vector<Position> ues;
    std::vector<LearningPoint> lps;
    sim::TimingConfig timing;
    sim::TrafficConfig traffic;
    McsTable mcs = default_mcs_table();

    double wigig_tx_power_dbm = 10.0;
    double wifi_tx_power_dbm = 20.0;
    double ue_tx_power_dbm = 10.0;
    WifiChannelParams wifi_channel;
    double online_shadowing_std_db = 2.0;
    double cs_threshold_dbm = -60.0;
    double link_margin_db = 0.0;
    double coverage_threshold_dbm = 0.0;  // defaults to noise + lowest MCS SNR
    int best_beams = 6;
    int max_reflections = 2;

    sim::Mode mode = sim::Mode::coordinated;
    sim::Time duration = sim::seconds(0.1);
    std::vector<std::uint64_t> seeds;

    // ap-count -> AP ids, the experiment ladder
    std::map<int, std::vector<int>> sweep_subsets;

    std::vector<std::string> warnings;  // unknown keys, reported not fatal

    RadioMapParams map_params() const;

    /// Assembles one runnable scenario over the given AP subset. The radio
    /// map must already be restricted to (and ordered like) active_ids.
    sim::Scenario make_scenario(const RadioMap& map, const ExemplarSet& exemplars,
                                sim::Mode run_mode,
                                const std::vector<int>& active_ids) const;

    std::vector<ApSite> active_sites(const std::vector<int>& ids) const;
    std::vector<int> all_ap_ids() const;
};

/// Table-style defaults: 18x10x3 m room, 8 ceiling APs in two rows of
/// four, 24 UEs, 90 learning points, 1 Gbps per UE.
ScenarioConfig default_config();

/// Reads a JSON scenario file, applying defaults for missing fields.
/// Unknown keys produce warnings; invariant violations throw with the
/// offending field named.
ScenarioConfig parse_config(const std::string& path);

ScenarioConfig parse_config_json(const std::string& text);

}  // namespace wigig
