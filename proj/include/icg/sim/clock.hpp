#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <utility>

namespace icg::sim {

/// Discrete-event virtual clock. Time is milliseconds since simulation
/// start and only moves forward. Events scheduled for the same instant fire
/// in insertion order. Single-threaded by contract: schedule and advance
/// from one thread only.
class SimClock {
public:
    using EventId = uint64_t;

    double now() const { return now_; }

    EventId schedule_at(double when_ms, std::function<void()> fn);
    EventId schedule_after(double delay_ms, std::function<void()> fn);

    /// Drops a pending event; no-op if it already fired.
    void cancel(EventId id);

    /// Fires every event with time <= until_ms in time order, then sets
    /// now to until_ms. Returns the number of events fired.
    size_t advance_until(double until_ms);

    /// Fires events until the queue drains (or now would pass `limit_ms`).
    /// Returns the number of events fired.
    size_t run_until_idle(
        double limit_ms = std::numeric_limits<double>::infinity());

    bool idle() const { return events_.empty(); }
    size_t pending() const { return events_.size(); }

private:
    using Key = std::pair<double, uint64_t>;  // (time, insertion seq)

    double now_ = 0.0;
    uint64_t next_seq_ = 0;
    std::map<Key, std::function<void()>> events_;
    std::map<EventId, Key> keys_;
};

}  // namespace icg::sim
