#include "wigig/sim/wifi_mac.hpp"

#include <algorithm>

namespace wigig::sim {

const char* frame_name(FrameKind k) {
    switch (k) {
        case FrameKind::WiFiMReq: return "M.Req";
        case FrameKind::WiFiMResp: return "M.Resp";
        case FrameKind::SwitchOn: return "SwitchOn";
        case FrameKind::NAVset: return "NAVset";
        case FrameKind::BRP: return "BRP";
        case FrameKind::FBK: return "FBK";
        case FrameKind::BID: return "BID";
        case FrameKind::SSW: return "SSW";
        case FrameKind::SSWFeedback: return "SSW-FBK";
        case FrameKind::Data: return "Data";
        case FrameKind::Ack: return "Ack";
        case FrameKind::Beacon: return "Beacon";
    }
    return "?";
}

const char* band_name(Band b) { return b == Band::wifi5 ? "5GHz" : "60GHz"; }

WifiMedium::WifiMedium(Engine& engine, const TimingConfig& timing, Rng& rng,
                       int num_stations)
    : engine_(engine), timing_(timing), rng_(rng),
      contenders_(static_cast<std::size_t>(num_stations)) {
    for (auto& c : contenders_) c.cw = timing_.wifi_cw_min;
}

void WifiMedium::redraw(Contender& c) {
    c.remaining = static_cast<int>(rng_.uniform_int(0, static_cast<std::uint64_t>(c.cw)));
}

void WifiMedium::enqueue(int station, const Frame& frame, std::function<void(bool)> done,
                         bool priority) {
    auto& c = contenders_[static_cast<std::size_t>(station)];
    if (priority && c.queue.size() > 1) {
        // never displace the frame currently under contention
        c.queue.emplace(c.queue.begin() + 1, frame, std::move(done));
    } else if (priority && c.queue.size() == 1 &&
               c.phase != Contender::Phase::idle) {
        c.queue.emplace_back(frame, std::move(done));
        std::swap(c.queue[0], c.queue[1]);
    } else {
        c.queue.emplace_back(frame, std::move(done));
    }
    if (c.phase == Contender::Phase::idle && c.queue.size() == 1) {
        c.cw = timing_.wifi_cw_min;
        redraw(c);
        start_access(station);
    }
}

void WifiMedium::transmit_now(int station, const Frame& frame,
                              std::function<void(bool)> done) {
    start_tx(station, frame, std::move(done), false);
}

void WifiMedium::start_access(int station) {
    auto& c = contenders_[static_cast<std::size_t>(station)];
    if (busy()) {
        c.phase = Contender::Phase::wait_idle;
        return;
    }
    begin_difs(station);
}

void WifiMedium::begin_difs(int station) {
    contenders_[static_cast<std::size_t>(station)].phase = Contender::Phase::difs;
    schedule_wake(station, timing_.wifi_difs, false);
}

// Waits `delay`, then checks whether the medium stayed idle over the open
// interval. A transmission starting at exactly the wakeup instant counts as
// idle: the station commits at the slot edge, producing same-slot
// collisions exactly as carrier sense would.
void WifiMedium::schedule_wake(int station, Time delay, bool count_down) {
    auto& c = contenders_[static_cast<std::size_t>(station)];
    const auto token = ++c.token;
    const auto epoch = start_epoch_;
    engine_.after(delay, [this, station, token, epoch, count_down] {
        auto& cc = contenders_[static_cast<std::size_t>(station)];
        if (cc.token != token) return;

        const std::uint64_t delta = start_epoch_ - epoch;
        const std::uint64_t at_now =
            last_start_time_ == engine_.now() ? starts_at_last_time_ : 0;
        if (delta > at_now) {
            cc.phase = Contender::Phase::wait_idle;
            return;
        }
        if (count_down) --cc.remaining;
        cc.phase = Contender::Phase::counting;
        if (cc.remaining == 0) {
            transmit(station);
        } else if (delta > 0) {
            cc.phase = Contender::Phase::wait_idle;  // went busy this instant
        } else {
            schedule_wake(station, timing_.wifi_slot, true);
        }
    });
}

void WifiMedium::transmit(int station) {
    auto& c = contenders_[static_cast<std::size_t>(station)];
    c.phase = Contender::Phase::idle;
    ++c.token;
    auto [frame, done] = c.queue.front();
    start_tx(station, frame, std::move(done), true);
}

void WifiMedium::start_tx(int station, const Frame& frame, std::function<void(bool)> done,
                          bool contended) {
    auto tx = std::make_shared<ActiveTx>();
    tx->frame = frame;
    tx->done = std::move(done);
    tx->owner = station;
    tx->contended = contended;
    if (!active_.empty()) {
        tx->corrupted = true;
        for (auto& other : active_) other->corrupted = true;
    }
    active_.push_back(tx);
    if (engine_.now() == last_start_time_) {
        ++starts_at_last_time_;
    } else {
        last_start_time_ = engine_.now();
        starts_at_last_time_ = 1;
    }
    ++start_epoch_;

    engine_.after(frame.duration, [this, tx] {
        active_.erase(std::find(active_.begin(), active_.end(), tx));
        auto& c = contenders_[static_cast<std::size_t>(tx->owner)];

        if (tx->contended) {
            if (!tx->corrupted) {
                c.queue.pop_front();
                c.cw = timing_.wifi_cw_min;
            } else {
                c.cw = std::min(2 * c.cw + 1, timing_.wifi_cw_max);
            }
            if (!c.queue.empty()) redraw(c);
        }

        if (active_.empty()) idle_started();

        if (tx->contended && !c.queue.empty() && c.phase == Contender::Phase::idle)
            start_access(tx->owner);

        if (!tx->corrupted) {
            if (on_deliver) on_deliver(tx->frame);
            if (tx->done) tx->done(true);
        } else if (!tx->contended && tx->done) {
            tx->done(false);
        }
    });
}

void WifiMedium::idle_started() {
    // all frozen stations resume DIFS together, so their slots align
    for (int s = 0; s < static_cast<int>(contenders_.size()); ++s) {
        auto& c = contenders_[static_cast<std::size_t>(s)];
        if (c.phase == Contender::Phase::wait_idle) begin_difs(s);
    }
}

}  // namespace wigig::sim
