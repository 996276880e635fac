#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "wigig/rng.hpp"
#include "wigig/sim/frame.hpp"
#include "wigig/sim/timing.hpp"

namespace wigig::sim {

/// Single 5 GHz channel with DCF contention. Frames from different
/// stations collide whenever they overlap in time; collided frames are
/// retried by the owning station with an exponentially growing contention
/// window. SIFS responses bypass contention via transmit_now.
class WifiMedium {
public:
    WifiMedium(Engine& engine, const TimingConfig& timing, Rng& rng, int num_stations);

    /// Queue a frame for DCF access. done(delivered) fires at the end of
    /// the transmission that settles the frame; contended frames auto-retry
    /// on collision, so their done only ever reports true. Priority frames
    /// jump ahead of the station's own queued traffic (EDCA-style).
    void enqueue(int station, const Frame& frame, std::function<void(bool)> done = {},
                 bool priority = false);

    /// Transmit at the current instant with no carrier sense (SIFS
    /// responses). No retry: done(false) on collision.
    void transmit_now(int station, const Frame& frame, std::function<void(bool)> done = {});

    /// Invoked once per successfully delivered frame.
    std::function<void(const Frame&)> on_deliver;

    bool busy() const { return !active_.empty(); }

private:
    struct ActiveTx {
        Frame frame;
        std::function<void(bool)> done;
        int owner = 0;
        bool corrupted = false;
        bool contended = false;
    };

    struct Contender {
        std::deque<std::pair<Frame, std::function<void(bool)>>> queue;
        enum class Phase { idle, wait_idle, difs, counting } phase = Phase::idle;
        int cw = 15;
        int remaining = 0;
        std::uint64_t token = 0;  // invalidates stale wakeups
    };

    void start_access(int station);
    void begin_difs(int station);
    void schedule_wake(int station, Time delay, bool count_down);
    void transmit(int station);
    void start_tx(int station, const Frame& frame, std::function<void(bool)> done,
                  bool contended);
    void idle_started();
    void redraw(Contender& c);

    Engine& engine_;
    const TimingConfig& timing_;
    Rng& rng_;
    std::vector<Contender> contenders_;
    std::vector<std::shared_ptr<ActiveTx>> active_;

    // transmission-start accounting for exact idle-interval checks
    std::uint64_t start_epoch_ = 0;
    Time last_start_time_ = -1;
    std::uint64_t starts_at_last_time_ = 0;
};

}  // namespace wigig::sim
