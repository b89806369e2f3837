#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "icg/view.hpp"

namespace icg {

/// Handlers attached to a correctable. Any of them may be left empty;
/// transitions without a matching handler are dropped for that consumer.
/// For one correctable, handlers are never invoked concurrently and their
/// invocation order matches the transition order.
struct CallbackSet {
    std::function<void(const View&)> on_update;
    std::function<void(const View&)> on_final;
    std::function<void(const ErrorInfo&)> on_error;
};

/// Shared counters for events that are swallowed rather than surfaced:
/// deliveries after a terminal state, binding protocol violations, and
/// handlers that threw.
struct Diagnostics {
    std::atomic<uint64_t> late_events{0};
    std::atomic<uint64_t> binding_violations{0};
    std::atomic<uint64_t> handler_failures{0};
};

enum class CorrectableState { Updating, Final, Error };

namespace detail {
class CorrectableCore;
}

class Correctable;

/// The single producer-side handle of a correctable. Bindings (or the
/// library routing binding results) drive the state machine through it.
class Completer {
public:
    /// Appends a preliminary view. Preconditions: the correctable is still
    /// updating, the view's rank is above every delivered rank and below
    /// the maximum expected rank. A rank violation closes the correctable
    /// with Error(BindingViolation); deliveries after a terminal state are
    /// ignored and counted.
    void deliver_update(View view) const;

    /// Closes with a final view carrying the maximum expected level. A
    /// confirmation view is materialized from the last preliminary before
    /// delivery.
    void close_final(View view) const;

    /// Closes with an error. Ignored (and counted) after a terminal state.
    void close_error(ErrorInfo err) const;

private:
    friend std::pair<Correctable, Completer> make_correctable(
        std::vector<ConsistencyLevel>, std::shared_ptr<Diagnostics>);
    explicit Completer(std::shared_ptr<detail::CorrectableCore> core)
        : core_(std::move(core)) {}
    std::shared_ptr<detail::CorrectableCore> core_;
};

using SpeculationFn = std::function<std::string(const std::string&)>;
using AbortFn = std::function<void(const std::string&)>;
using AwaitResult = std::variant<std::string, ErrorInfo>;

/// A placeholder for the progressively improving result of one operation on
/// a replicated object. It starts updating, receives zero or more
/// preliminary views at strictly increasing consistency levels, and closes
/// exactly once with a final view or an error.
///
/// A correctable may be completed from one execution context while another
/// attaches callbacks or awaits; all transitions and handler invocations
/// are serialized per instance. Handlers must not block the completing
/// context.
class Correctable {
public:
    /// Attaches the callback set (single-shot; a second call throws
    /// std::logic_error). Transitions that happened before attachment are
    /// replayed to the handlers in order. Returns *this for chaining.
    Correctable& set_callbacks(CallbackSet callbacks);

    /// Returns a new single-level correctable C' that applies `fn` to the
    /// first view and to every later view whose value differs from the
    /// previous one. Each re-execution is preceded by `abort` (if given) on
    /// the stale result. When this correctable closes with a final value
    /// equal to the last input fed to `fn`, C' closes immediately with the
    /// already-computed result; otherwise the stale result is aborted, `fn`
    /// re-runs on the final value and C' closes with the fresh result. An
    /// error closes C' with the same error (after aborting any speculation).
    /// `fn` throwing closes C' with Error(SpeculationAborted); `abort`
    /// throwing is counted and swallowed.
    Correctable speculate(SpeculationFn fn, AbortFn abort = nullptr);

    /// Blocks the caller until the correctable is terminal or the timeout
    /// elapses. A timeout yields ErrorInfo{Timeout} without touching the
    /// correctable.
    AwaitResult await_final(std::chrono::milliseconds timeout) const;

    CorrectableState state() const;
    bool is_terminal() const;
    std::vector<View> delivered_views() const;
    std::optional<View> final_view() const;
    std::optional<ErrorInfo> error() const;
    const std::vector<ConsistencyLevel>& expected_levels() const;

    /// Deliveries and closes that arrived after the terminal state of this
    /// instance.
    uint64_t late_event_count() const;

private:
    friend std::pair<Correctable, Completer> make_correctable(
        std::vector<ConsistencyLevel>, std::shared_ptr<Diagnostics>);
    explicit Correctable(std::shared_ptr<detail::CorrectableCore> core)
        : core_(std::move(core)) {}
    std::shared_ptr<detail::CorrectableCore> core_;
};

/// Creates a correctable expecting views at the given levels (non-empty,
/// strictly increasing ranks; otherwise std::invalid_argument). The
/// returned Completer is the producer side. `diagnostics` may be shared
/// across many correctables; pass nullptr to keep counters instance-local.
std::pair<Correctable, Completer> make_correctable(
    std::vector<ConsistencyLevel> expected_levels,
    std::shared_ptr<Diagnostics> diagnostics = nullptr);

}  // namespace icg
