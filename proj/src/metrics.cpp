#include "wigig/metrics.hpp"

namespace wigig {

MetricsReport compute_metrics(const sim::RunTally& tally) {
    MetricsReport m;
    m.ns = tally.ns();
    m.nd = tally.nd();
    m.generated = tally.generated();
    m.in_flight = tally.queued();
    m.no_packets = m.ns + m.nd == 0;

    const double payload_bits = 8.0 * tally.packet_octets;
    m.throughput_gbps =
        static_cast<double>(m.ns) * payload_bits / tally.duration_s / 1e9;
    if (m.ns > 0)
        m.avg_delay_ms = tally.delay_sum_s() / static_cast<double>(m.ns) * 1e3;
    m.drop_rate_pct =
        m.no_packets ? 0.0
                     : 100.0 * static_cast<double>(m.nd) /
                           static_cast<double>(m.ns + m.nd);

    for (std::size_t n = 0; n < tally.per_ap_packets.size(); ++n) {
        MetricsReport::PerAp ap;
        ap.packets = tally.per_ap_packets[n];
        ap.throughput_gbps = tally.per_ap_bits[n] / tally.duration_s / 1e9;
        m.per_ap.push_back(ap);
    }
    return m;
}

}  // namespace wigig
