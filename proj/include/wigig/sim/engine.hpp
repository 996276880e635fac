#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace wigig::sim {

using Time = std::int64_t;  // nanoseconds

inline Time seconds(double s) { return static_cast<Time>(s * 1e9 + 0.5); }
inline Time microseconds(double us) { return static_cast<Time>(us * 1e3 + 0.5); }
inline double to_seconds(Time t) { return static_cast<double>(t) * 1e-9; }

/// One line of the event trace: time, station, action, band, outcome.
struct TraceEvent {
    Time t = 0;
    std::string station;
    std::string action;
    std::string band;
    std::string outcome;
    std::string detail;

    std::string line() const;
};

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void event(const TraceEvent& e) = 0;
};

/// Collects structured events in memory; used by tests and property checks.
class TraceRecorder final : public TraceSink {
public:
    void event(const TraceEvent& e) override { events.push_back(e); }
    std::vector<TraceEvent> events;
};

/// Writes the one-line-per-event text form.
class TraceWriter final : public TraceSink {
public:
    explicit TraceWriter(std::ostream& out) : out_(out) {}
    void event(const TraceEvent& e) override;

private:
    std::ostream& out_;
};

/// Fatal protocol invariant violation; carries the tail of the trace.
struct SimAbort : std::runtime_error {
    SimAbort(const std::string& what, std::string trace_tail)
        : std::runtime_error(what + "\n--- recent events ---\n" + trace_tail) {}
};

/// Single-threaded event queue. Events with equal timestamps pop in
/// scheduling order, so a run is a pure function of its inputs.
class Engine {
public:
    using Callback = std::function<void()>;

    Time now() const { return now_; }

    void at(Time t, Callback cb);
    void after(Time dt, Callback cb) { at(now_ + dt, std::move(cb)); }

    /// Runs every event up to and including end_time.
    void run_until(Time end_time);

    void add_sink(TraceSink* sink) { sinks_.push_back(sink); }

    void trace(const std::string& station, const std::string& action, const std::string& band,
               const std::string& outcome, const std::string& detail = "");

    std::string recent_trace() const;

    /// Invariant hook, checked after every callback when set.
    std::function<void()> post_event_check;

private:
    struct Item {
        Time t;
        std::uint64_t seq;
        Callback cb;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };

    Time now_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Item, std::vector<Item>, Later> queue_;
    std::vector<TraceSink*> sinks_;
    std::deque<std::string> tail_;
};

}  // namespace wigig::sim
