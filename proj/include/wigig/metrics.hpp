#pragma once

#include <optional>
#include <vector>

#include "wigig/sim/simulation.hpp"

namespace wigig {

struct MetricsReport {
    double throughput_gbps = 0.0;
    std::optional<double> avg_delay_ms;  // empty when nothing was delivered
    double drop_rate_pct = 0.0;
    long ns = 0;
    long nd = 0;
    long generated = 0;
    long in_flight = 0;
    bool no_packets = false;

    struct PerAp {
        long packets = 0;
        double throughput_gbps = 0.0;
    };
    std::vector<PerAp> per_ap;
};

/// Throughput, mean delay and dropping rate from a finished run.
MetricsReport compute_metrics(const sim::RunTally& tally);

}  // namespace wigig
