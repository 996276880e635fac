#pragma once

#include <string>
#include <vector>

#include "wigig/config.hpp"
#include "wigig/metrics.hpp"

namespace wigig {

struct SweepRow {
    int ap_count = 0;
    sim::Mode mode = sim::Mode::coordinated;
    double throughput_gbps = 0.0;
    double delay_ms = 0.0;
    double drop_rate_pct = 0.0;
    double throughput_std = 0.0;
    double delay_std = 0.0;
    double drop_std = 0.0;
    int seeds = 0;
};

/// Runs every (AP count, mode, seed) combination of the config's sweep
/// ladder against the prebuilt full radio map. Per-subset databases are the
/// column restrictions of the full map, re-clustered over the active APs.
std::vector<SweepRow> run_sweep(const ScenarioConfig& config, const RadioMap& full_map,
                                const std::vector<sim::Mode>& modes,
                                const std::vector<std::uint64_t>& seeds);

/// `ap_count,mode,throughput_gbps,delay_ms,drop_rate_pct,...` CSV with
/// locale-independent formatting, one row per (count, mode).
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::string csv_text(const std::vector<SweepRow>& rows);

}  // namespace wigig
