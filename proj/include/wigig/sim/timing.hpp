#pragma once

#include "wigig/sim/engine.hpp"

namespace wigig::sim {

/// All MAC timing constants in one block. Defaults follow the 802.11
/// (5 GHz OFDM) and 802.11ad conventions; everything is configurable.
struct TimingConfig {
    // 5 GHz contention
    Time wifi_slot = microseconds(9);
    Time wifi_sifs = microseconds(16);
    Time wifi_difs = microseconds(34);
    int wifi_cw_min = 15;
    int wifi_cw_max = 1023;

    // 5 GHz control frame durations
    Time wifi_mreq = microseconds(36);
    Time wifi_mresp = microseconds(36);
    Time wifi_switch_on = microseconds(28);
    Time wifi_navset = microseconds(28);
    Time wifi_bid = microseconds(32);

    // 60 GHz
    Time wigig_slot = microseconds(5);
    Time wigig_sifs = microseconds(3);
    Time wigig_sbifs = microseconds(1);
    int wigig_cw_min = 15;
    int wigig_cw_max = 1023;

    Time ssw_frame = microseconds(16);
    Time ssw_feedback = microseconds(16);
    Time brp_frame = microseconds(24);
    Time fbk_frame = microseconds(16);
    Time ack_frame = microseconds(5);
    Time beacon_frame = microseconds(20);
    Time data_overhead = microseconds(2);  // preamble + PHY header

    Time beacon_interval = seconds(1.0);
    Time txop_limit = microseconds(8000);
    Time holdoff = microseconds(500);
    Time response_timeout_margin = microseconds(20);

    /// Air time of the beam refinement phase over x candidate beams.
    Time brp_phase(int x) const {
        return x * (brp_frame + wigig_sifs) + fbk_frame;
    }

    /// Air time of an exhaustive sector sweep plus the refinement pass.
    Time sls_phase(int sectors) const {
        return sectors * (ssw_frame + wigig_sbifs) + wigig_sifs + ssw_feedback + wigig_sifs +
               brp_phase(1);
    }

    /// Reservation announced in a NAVset frame: the estimated time to finish
    /// refinement and broadcast the beam identification.
    Time nav_reservation(int x) const {
        return brp_phase(x) + wigig_sifs + wifi_bid + response_timeout_margin;
    }
};

}  // namespace wigig::sim
