#pragma once

#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "icg/correctable.hpp"

namespace icg::testing {

// Independent walk of the speculation rule: run on the first value and on
// every value that differs from the previous one; abort before each re-run.
struct SpecCounts {
    int spec_calls = 0;
    int abort_calls = 0;
    bool operator==(const SpecCounts&) const = default;
};

inline SpecCounts speculation_oracle(const std::vector<std::string>& values) {
    SpecCounts counts;
    std::optional<std::string> last;
    for (const auto& v : values) {
        if (!last || *last != v) {
            if (last) counts.abort_calls += 1;
            counts.spec_calls += 1;
            last = v;
        }
    }
    return counts;
}

// Runs the real speculate combinator over a scripted view sequence (all but
// the last value are preliminaries) and reports observed behavior.
struct SpecRunResult {
    SpecCounts counts;
    std::string final_value;
    bool closed_final = false;
};

inline SpecRunResult run_speculation_sequence(
    const std::vector<std::string>& values) {
    const int n = static_cast<int>(values.size());
    std::vector<ConsistencyLevel> levels;
    for (int i = 0; i < n; ++i) {
        levels.push_back({static_cast<uint32_t>(i), "l" + std::to_string(i)});
    }
    auto [c, completer] = make_correctable(levels);

    SpecRunResult result;
    Correctable derived = c.speculate(
        [&result](const std::string& v) {
            result.counts.spec_calls += 1;
            return "S(" + v + ")";
        },
        [&result](const std::string&) { result.counts.abort_calls += 1; });
    derived.set_callbacks(CallbackSet{
        nullptr,
        [&result](const View& v) {
            result.closed_final = true;
            result.final_value = v.value;
        },
        nullptr});

    for (int i = 0; i < n - 1; ++i) {
        completer.deliver_update(View{values[i], levels[i], false, 0.0});
    }
    completer.close_final(View{values[n - 1], levels[n - 1], false, 0.0});
    return result;
}

// One randomized correctable schedule: a level list, a stream of producer
// events (some invalid), and a callback attach point. Used by the
// state-machine property suite.
struct ScheduleEvent {
    enum Kind { Update, Final, Fail, LateUpdate, BadRank, WrongFinalLevel };
    Kind kind;
    std::string value;
    uint32_t rank = 0;
};

struct Schedule {
    std::vector<ConsistencyLevel> levels;
    std::vector<ScheduleEvent> events;
    int attach_after = 0;  // events processed before set_callbacks
    bool contains_violation = false;
};

inline Schedule random_schedule(std::mt19937_64& rng) {
    Schedule s;
    const int n_levels = 1 + static_cast<int>(rng() % 4);
    uint32_t rank = rng() % 2;
    for (int i = 0; i < n_levels; ++i) {
        s.levels.push_back({rank, "L" + std::to_string(rank)});
        rank += 1 + rng() % 3;
    }

    const bool fails = rng() % 4 == 0;
    const bool misbehaves = rng() % 5 == 0;
    const int prelims = static_cast<int>(rng() % n_levels);

    for (int i = 0; i < prelims; ++i) {
        s.events.push_back(
            {ScheduleEvent::Update, "v" + std::to_string(i), s.levels[i].rank});
    }
    if (misbehaves) {
        const int kind = static_cast<int>(rng() % 2);
        if (kind == 0 && prelims > 0) {
            // repeat a rank already delivered
            s.events.push_back({ScheduleEvent::BadRank, "dup",
                                s.levels[prelims - 1].rank});
        } else {
            // close with a level that is not the maximum
            s.events.push_back({ScheduleEvent::WrongFinalLevel, "wrong",
                                s.levels.front().rank});
            if (n_levels == 1) {
                // closing with the only level is legal, not a violation
                s.events.back().kind = ScheduleEvent::Final;
                s.events.back().value = "f";
            }
        }
        s.contains_violation =
            s.events.back().kind != ScheduleEvent::Final;
    } else if (fails) {
        s.events.push_back({ScheduleEvent::Fail, "boom", 0});
    } else {
        s.events.push_back(
            {ScheduleEvent::Final, "f", s.levels.back().rank});
    }
    // a straggler after the terminal event
    if (rng() % 3 == 0) {
        s.events.push_back(
            {ScheduleEvent::LateUpdate, "late", s.levels.front().rank});
    }
    s.attach_after = static_cast<int>(rng() % (s.events.size() + 1));
    return s;
}

struct ScheduleTrace {
    std::vector<std::string> handler_log;  // "U:v", "F:v", "E:kind"
    CorrectableState end_state = CorrectableState::Updating;
    uint64_t late_events = 0;
    std::vector<View> delivered;
    std::optional<View> final_view;
};

inline ScheduleTrace play_schedule(const Schedule& s, bool attach_at_point) {
    auto [c, completer] = make_correctable(s.levels);
    auto trace = std::make_shared<ScheduleTrace>();

    CallbackSet cbs;
    cbs.on_update = [trace](const View& v) {
        trace->handler_log.push_back("U:" + v.value);
    };
    cbs.on_final = [trace](const View& v) {
        trace->handler_log.push_back("F:" + v.value);
    };
    cbs.on_error = [trace](const ErrorInfo& e) {
        trace->handler_log.push_back(std::string("E:") + to_string(e.kind));
    };

    int processed = 0;
    bool attached = false;
    auto maybe_attach = [&] {
        if (!attached &&
            (!attach_at_point || processed >= s.attach_after)) {
            c.set_callbacks(cbs);
            attached = true;
        }
    };
    maybe_attach();
    for (const auto& ev : s.events) {
        const ConsistencyLevel lvl{ev.rank, "L" + std::to_string(ev.rank)};
        switch (ev.kind) {
            case ScheduleEvent::Update:
            case ScheduleEvent::BadRank:
            case ScheduleEvent::LateUpdate:
                completer.deliver_update(View{ev.value, lvl, false, 0.0});
                break;
            case ScheduleEvent::Final:
                completer.close_final(View{ev.value, lvl, false, 0.0});
                break;
            case ScheduleEvent::WrongFinalLevel:
                completer.close_final(View{ev.value, lvl, false, 0.0});
                break;
            case ScheduleEvent::Fail:
                completer.close_error(
                    ErrorInfo{ErrorKind::StorageError, ev.value});
                break;
        }
        ++processed;
        maybe_attach();
    }
    maybe_attach();

    trace->end_state = c.state();
    trace->late_events = c.late_event_count();
    trace->delivered = c.delivered_views();
    trace->final_view = c.final_view();
    return *trace;
}

// Invariant bundle checked per schedule; returns an empty string when all
// hold, otherwise a description of the first failure.
inline std::string check_schedule_invariants(const Schedule& s) {
    const ScheduleTrace early = play_schedule(s, false);  // attach up front
    const ScheduleTrace late = play_schedule(s, true);    // attach mid-stream

    if (early.handler_log != late.handler_log) {
        return "replay mismatch between early and late attachment";
    }
    int terminals = 0;
    for (const auto& entry : early.handler_log) {
        if (entry[0] == 'F' || entry[0] == 'E') ++terminals;
    }
    if (terminals != 1) return "terminal callbacks fired " +
                               std::to_string(terminals) + " times";

    // strictly increasing ranks across delivered views and the final view
    uint32_t last_rank = 0;
    bool first = true;
    for (const auto& v : early.delivered) {
        if (!first && v.level.rank <= last_rank) return "non-monotone ranks";
        last_rank = v.level.rank;
        first = false;
    }
    if (early.final_view) {
        if (!first && early.final_view->level.rank <= last_rank) {
            return "final rank not above preliminaries";
        }
    }

    if (s.contains_violation) {
        if (early.end_state != CorrectableState::Error) {
            return "violation did not close the correctable with an error";
        }
        bool saw_violation = false;
        for (const auto& entry : early.handler_log) {
            if (entry == std::string("E:") + to_string(ErrorKind::BindingViolation)) {
                saw_violation = true;
            }
        }
        if (!saw_violation) return "missing BindingViolation error callback";
    }
    return std::string();
}

}  // namespace icg::testing
