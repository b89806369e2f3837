#include "icg/correctable.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <stdexcept>

namespace icg {

bool valid_level_list(const std::vector<ConsistencyLevel>& levels) {
    if (levels.empty()) return false;
    for (size_t i = 1; i < levels.size(); ++i) {
        if (levels[i].rank <= levels[i - 1].rank) return false;
    }
    for (size_t i = 0; i < levels.size(); ++i) {
        for (size_t j = i + 1; j < levels.size(); ++j) {
            if (levels[i].name == levels[j].name) return false;
        }
    }
    return true;
}

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::BindingViolation: return "BindingViolation";
        case ErrorKind::StorageError: return "StorageError";
        case ErrorKind::SpeculationAborted: return "SpeculationAborted";
    }
    return "Unknown";
}

namespace detail {

class CorrectableCore {
public:
    CorrectableCore(std::vector<ConsistencyLevel> levels,
                    std::shared_ptr<Diagnostics> diag)
        : expected_(std::move(levels)), diag_(std::move(diag)) {}

    void deliver_update(View view) {
        std::unique_lock lk(mu_);
        if (state_ != CorrectableState::Updating) {
            note_late(lk);
            return;
        }
        const uint32_t max_rank = expected_.back().rank;
        if (view.level.rank >= max_rank || !rank_monotone(view.level.rank)) {
            violation(lk, "non-monotone or out-of-range preliminary rank");
            return;
        }
        if (!materialize(lk, view)) return;
        delivered_.push_back(view);
        log_.push_back(Transition{Transition::Update, view, {}});
        dispatch(lk);
    }

    void close_final(View view) {
        std::unique_lock lk(mu_);
        if (state_ != CorrectableState::Updating) {
            note_late(lk);
            return;
        }
        if (view.level.rank != expected_.back().rank) {
            violation(lk, "final view does not carry the maximum expected level");
            return;
        }
        if (!delivered_.empty() &&
            view.level.rank <= delivered_.back().level.rank) {
            violation(lk, "final rank not above delivered ranks");
            return;
        }
        if (!materialize(lk, view)) return;
        state_ = CorrectableState::Final;
        final_view_ = view;
        log_.push_back(Transition{Transition::Close, view, {}});
        cv_.notify_all();
        dispatch(lk);
    }

    void close_error(ErrorInfo err) {
        std::unique_lock lk(mu_);
        if (state_ != CorrectableState::Updating) {
            note_late(lk);
            return;
        }
        fail(lk, std::move(err));
    }

    void set_callbacks(CallbackSet cbs) {
        std::unique_lock lk(mu_);
        if (callbacks_attached_) {
            throw std::logic_error("set_callbacks may only be called once");
        }
        callbacks_ = std::move(cbs);
        callbacks_attached_ = true;
        dispatch(lk);
    }

    AwaitResult await_final(std::chrono::milliseconds timeout) {
        std::unique_lock lk(mu_);
        const bool terminal = cv_.wait_for(lk, timeout, [&] {
            return state_ != CorrectableState::Updating;
        });
        if (!terminal) {
            return ErrorInfo{ErrorKind::Timeout, "await_final timed out"};
        }
        if (state_ == CorrectableState::Final) return final_view_->value;
        return *error_;
    }

    CorrectableState state() const {
        std::lock_guard lk(mu_);
        return state_;
    }

    std::vector<View> delivered_views() const {
        std::lock_guard lk(mu_);
        return delivered_;
    }

    std::optional<View> final_view() const {
        std::lock_guard lk(mu_);
        return final_view_;
    }

    std::optional<ErrorInfo> error() const {
        std::lock_guard lk(mu_);
        return error_;
    }

    const std::vector<ConsistencyLevel>& expected_levels() const {
        return expected_;
    }

    uint64_t late_event_count() const {
        std::lock_guard lk(mu_);
        return late_events_;
    }

private:
    struct Transition {
        enum Kind { Update, Close, Fail } kind;
        View view;
        ErrorInfo err;
    };

    bool rank_monotone(uint32_t rank) const {
        return delivered_.empty() || rank > delivered_.back().level.rank;
    }

    // Resolves a confirmation view into a full-payload one. Consumers never
    // observe the confirmation flag; a confirmation without a preceding
    // view, or one whose payload contradicts it, is a binding bug.
    bool materialize(std::unique_lock<std::mutex>& lk, View& view) {
        if (!view.is_confirmation) return true;
        if (delivered_.empty()) {
            violation(lk, "confirmation without a preceding view");
            return false;
        }
        const std::string& prev = delivered_.back().value;
        if (!view.value.empty() && view.value != prev) {
            violation(lk, "confirmation payload differs from preceding view");
            return false;
        }
        view.value = prev;
        view.is_confirmation = false;
        return true;
    }

    void violation(std::unique_lock<std::mutex>& lk, const char* what) {
        if (diag_) diag_->binding_violations.fetch_add(1);
        fail(lk, ErrorInfo{ErrorKind::BindingViolation, what});
    }

    void fail(std::unique_lock<std::mutex>& lk, ErrorInfo err) {
        state_ = CorrectableState::Error;
        error_ = err;
        log_.push_back(Transition{Transition::Fail, {}, std::move(err)});
        cv_.notify_all();
        dispatch(lk);
    }

    void note_late(std::unique_lock<std::mutex>&) {
        ++late_events_;
        if (diag_) diag_->late_events.fetch_add(1);
    }

    // Runs pending handler invocations in transition order. Only one thread
    // dispatches at a time; handlers run without the lock so they may query
    // this correctable or complete other ones.
    void dispatch(std::unique_lock<std::mutex>& lk) {
        if (!callbacks_attached_ || dispatching_) return;
        dispatching_ = true;
        while (cursor_ < log_.size()) {
            const Transition t = log_[cursor_++];
            lk.unlock();
            try {
                switch (t.kind) {
                    case Transition::Update:
                        if (callbacks_.on_update) callbacks_.on_update(t.view);
                        break;
                    case Transition::Close:
                        if (callbacks_.on_final) callbacks_.on_final(t.view);
                        break;
                    case Transition::Fail:
                        if (callbacks_.on_error) callbacks_.on_error(t.err);
                        break;
                }
            } catch (...) {
                if (diag_) diag_->handler_failures.fetch_add(1);
            }
            lk.lock();
        }
        dispatching_ = false;
    }

    mutable std::mutex mu_;
    std::condition_variable cv_;
    const std::vector<ConsistencyLevel> expected_;
    std::shared_ptr<Diagnostics> diag_;

    CorrectableState state_ = CorrectableState::Updating;
    std::vector<View> delivered_;
    std::optional<View> final_view_;
    std::optional<ErrorInfo> error_;

    std::vector<Transition> log_;
    size_t cursor_ = 0;
    bool dispatching_ = false;
    CallbackSet callbacks_;
    bool callbacks_attached_ = false;
    uint64_t late_events_ = 0;
};

}  // namespace detail

void Completer::deliver_update(View view) const {
    core_->deliver_update(std::move(view));
}

void Completer::close_final(View view) const {
    core_->close_final(std::move(view));
}

void Completer::close_error(ErrorInfo err) const {
    core_->close_error(std::move(err));
}

Correctable& Correctable::set_callbacks(CallbackSet callbacks) {
    core_->set_callbacks(std::move(callbacks));
    return *this;
}

AwaitResult Correctable::await_final(std::chrono::milliseconds timeout) const {
    return core_->await_final(timeout);
}

CorrectableState Correctable::state() const { return core_->state(); }

bool Correctable::is_terminal() const {
    return core_->state() != CorrectableState::Updating;
}

std::vector<View> Correctable::delivered_views() const {
    return core_->delivered_views();
}

std::optional<View> Correctable::final_view() const {
    return core_->final_view();
}

std::optional<ErrorInfo> Correctable::error() const { return core_->error(); }

const std::vector<ConsistencyLevel>& Correctable::expected_levels() const {
    return core_->expected_levels();
}

uint64_t Correctable::late_event_count() const {
    return core_->late_event_count();
}

namespace {

struct SpeculationRun {
    SpeculationFn fn;
    AbortFn abort;
    std::shared_ptr<Diagnostics> diag;

    std::optional<std::string> last_input;
    std::string last_result;
    bool closed = false;

    // Returns false when the speculation chain is dead (fn threw).
    bool feed(const std::string& value, const Completer& out) {
        if (closed) return false;
        if (last_input && *last_input == value) return true;
        if (last_input) run_abort();
        try {
            last_result = fn(value);
            last_input = value;
        } catch (...) {
            closed = true;
            out.close_error(ErrorInfo{ErrorKind::SpeculationAborted,
                                      "speculation function raised"});
            return false;
        }
        return true;
    }

    void run_abort() {
        if (!abort) return;
        try {
            abort(last_result);
        } catch (...) {
            if (diag) diag->handler_failures.fetch_add(1);
        }
    }
};

}  // namespace

Correctable Correctable::speculate(SpeculationFn fn, AbortFn abort) {
    if (!fn) {
        throw std::invalid_argument("speculate requires a speculation function");
    }
    auto diag = std::make_shared<Diagnostics>();
    auto [derived, completer] = make_correctable(
        {core_->expected_levels().back()}, diag);

    auto run = std::make_shared<SpeculationRun>();
    run->fn = std::move(fn);
    run->abort = std::move(abort);
    run->diag = diag;

    CallbackSet cbs;
    cbs.on_update = [run, completer](const View& v) {
        run->feed(v.value, completer);
    };
    cbs.on_final = [run, completer](const View& v) {
        if (!run->feed(v.value, completer)) return;
        run->closed = true;
        View out;
        out.value = run->last_result;
        out.level = v.level;
        out.arrival_ms = v.arrival_ms;
        completer.close_final(std::move(out));
    };
    cbs.on_error = [run, completer](const ErrorInfo& e) {
        if (run->closed) return;
        if (run->last_input) run->run_abort();
        run->closed = true;
        completer.close_error(e);
    };
    set_callbacks(std::move(cbs));
    return derived;
}

std::pair<Correctable, Completer> make_correctable(
    std::vector<ConsistencyLevel> expected_levels,
    std::shared_ptr<Diagnostics> diagnostics) {
    if (!valid_level_list(expected_levels)) {
        throw std::invalid_argument(
            "expected_levels must be non-empty with strictly increasing ranks "
            "and unique names");
    }
    auto core = std::make_shared<detail::CorrectableCore>(
        std::move(expected_levels), std::move(diagnostics));
    return {Correctable(core), Completer(core)};
}

}  // namespace icg
