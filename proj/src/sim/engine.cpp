#include "wigig/sim/engine.hpp"

#include <charconv>
#include <ostream>
#include <stdexcept>

namespace wigig::sim {

std::string TraceEvent::line() const {
    // fixed-width nanosecond timestamp keeps the file byte-stable
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), t);
    std::string s(buf, p);
    s += ' ';
    s += station;
    s += ' ';
    s += action;
    s += ' ';
    s += band;
    s += ' ';
    s += outcome;
    if (!detail.empty()) {
        s += ' ';
        s += detail;
    }
    return s;
}

void TraceWriter::event(const TraceEvent& e) { out_ << e.line() << '\n'; }

void Engine::at(Time t, Callback cb) {
    if (t < now_) throw std::logic_error("engine: scheduling into the past");
    queue_.push(Item{t, seq_++, std::move(cb)});
}

void Engine::run_until(Time end_time) {
    while (!queue_.empty() && queue_.top().t <= end_time) {
        // moving out of the priority queue requires a const_cast; the item
        // is popped immediately afterwards
        Item item = std::move(const_cast<Item&>(queue_.top()));
        queue_.pop();
        now_ = item.t;
        item.cb();
        if (post_event_check) post_event_check();
    }
    now_ = end_time;
}

void Engine::trace(const std::string& station, const std::string& action,
                   const std::string& band, const std::string& outcome,
                   const std::string& detail) {
    TraceEvent e{now_, station, action, band, outcome, detail};
    for (TraceSink* s : sinks_) s->event(e);
    tail_.push_back(e.line());
    if (tail_.size() > 50) tail_.pop_front();
}

std::string Engine::recent_trace() const {
    std::string out;
    for (const std::string& line : tail_) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace wigig::sim
