#include "icg/sim/clock.hpp"

#include <stdexcept>

namespace icg::sim {

SimClock::EventId SimClock::schedule_at(double when_ms,
                                        std::function<void()> fn) {
    if (when_ms < now_) {
        throw std::invalid_argument("cannot schedule an event in the past");
    }
    const EventId id = next_seq_++;
    const Key key{when_ms, id};
    events_.emplace(key, std::move(fn));
    keys_.emplace(id, key);
    return id;
}

SimClock::EventId SimClock::schedule_after(double delay_ms,
                                           std::function<void()> fn) {
    return schedule_at(now_ + delay_ms, std::move(fn));
}

void SimClock::cancel(EventId id) {
    auto it = keys_.find(id);
    if (it == keys_.end()) return;
    events_.erase(it->second);
    keys_.erase(it);
}

size_t SimClock::advance_until(double until_ms) {
    size_t fired = 0;
    while (!events_.empty() && events_.begin()->first.first <= until_ms) {
        auto it = events_.begin();
        now_ = it->first.first;
        auto fn = std::move(it->second);
        keys_.erase(it->first.second);
        events_.erase(it);
        fn();
        ++fired;
    }
    if (until_ms > now_) now_ = until_ms;
    return fired;
}

size_t SimClock::run_until_idle(double limit_ms) {
    size_t fired = 0;
    while (!events_.empty() && events_.begin()->first.first <= limit_ms) {
        auto it = events_.begin();
        now_ = it->first.first;
        auto fn = std::move(it->second);
        keys_.erase(it->first.second);
        events_.erase(it);
        fn();
        ++fired;
    }
    return fired;
}

}  // namespace icg::sim
