#pragma once

#include <string>

#include "wigig/sim/engine.hpp"

namespace wigig::sim {

enum class Band { wifi5, wigig60 };

enum class FrameKind {
    WiFiMReq,
    WiFiMResp,
    SwitchOn,
    NAVset,
    BRP,
    FBK,
    BID,
    SSW,
    SSWFeedback,
    Data,
    Ack,
    Beacon,
};

const char* frame_name(FrameKind k);
const char* band_name(Band b);

/// Station addressing: APs first, then UEs; kBroadcast targets everyone.
inline constexpr int kBroadcast = -1;

struct Frame {
    FrameKind kind = FrameKind::Data;
    int source = 0;
    int destination = kBroadcast;
    Band band = Band::wifi5;
    Time duration = 0;
    int sector = 0;      // transmit sector for 60 GHz frames, 0 = quasi-omni
    int payload_id = 0;  // packet id / beam id, by kind
};

}  // namespace wigig::sim
