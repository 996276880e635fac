#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "wigig/coordinator.hpp"
#include "wigig/exemplars.hpp"
#include "wigig/mcs.hpp"
#include "wigig/radiomap.hpp"
#include "wigig/rng.hpp"
#include "wigig/sim/frame.hpp"
#include "wigig/sim/timing.hpp"
#include "wigig/sim/wifi_mac.hpp"

namespace wigig::sim {

enum class Mode { coordinated, uncoordinated };

inline const char* mode_name(Mode m) {
    return m == Mode::coordinated ? "coordinated" : "uncoordinated";
}

struct TrafficConfig {
    double offered_load_bps = 1e9;
    bool per_ue = true;  // false: the load is an aggregate split over UEs
    int packet_octets = 1500;
    int max_retransmissions = 10;
    double stop_fraction = 1.0;  // arrivals stop at this fraction of the run
};

/// Everything one run needs, fully resolved. The radio map and exemplar
/// columns must line up with `aps`; uncoordinated runs ignore both.
struct Scenario {
    Environment env;
    std::vector<ApSite> aps;
    std::vector<Position> ues;
    RadioMap map;
    ExemplarSet exemplars;
    McsTable mcs = default_mcs_table();
    TimingConfig timing;
    TrafficConfig traffic;

    double wigig_tx_power_dbm = 10.0;
    double wifi_tx_power_dbm = 20.0;
    double ue_tx_power_dbm = 10.0;
    WifiChannelParams wifi_channel;
    double online_shadowing_std_db = 2.0;
    double cs_threshold_dbm = -60.0;
    double link_margin_db = 0.0;  // backoff below the measured link quality
    int best_beams = 6;
    int max_reflections = 2;
    Time duration = seconds(0.1);
    Mode mode = Mode::coordinated;
};

struct UeTally {
    long generated = 0;
    long delivered = 0;
    long dropped = 0;
    long queued_at_end = 0;
    double delay_sum_s = 0.0;
};

struct RunTally {
    std::vector<UeTally> per_ue;
    std::vector<long> per_ap_packets;
    std::vector<double> per_ap_bits;
    double duration_s = 0.0;
    int packet_octets = 0;

    long ns() const;
    long nd() const;
    long generated() const;
    long queued() const;
    double delay_sum_s() const;
};

/// One deterministic discrete-event run of the dual-band MAC.
class Simulation {
public:
    Simulation(const Scenario& scenario, std::uint64_t seed, TraceSink* sink = nullptr);
    ~Simulation();

    /// Schedule an extra packet for tests and protocol studies.
    void inject_packet(int ue, Time t);

    RunTally run();

    /// Test hook: force an AP into the refinement state to exercise the
    /// refinement-exclusivity guard.
    void test_force_bf_state(int ap);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace wigig::sim
