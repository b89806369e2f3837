#pragma once

#include <string>

#include "icg/level.hpp"

namespace icg {

/// One result of an operation at one consistency level. `value` holds the
/// canonically serialized operation result (an empty string doubles as the
/// not-found / null marker for reads and dequeues).
///
/// `is_confirmation` is a transport-level flag: a binding sets it when the
/// payload was elided on the wire because it equals the preceding view's
/// payload. The correctable materializes such views before delivering them,
/// so consumer-facing views always carry the full value with the flag
/// cleared.
struct View {
    std::string value;
    ConsistencyLevel level;
    bool is_confirmation = false;
    double arrival_ms = 0.0;
};

enum class ErrorKind {
    Timeout,
    BindingViolation,
    StorageError,
    SpeculationAborted,
};

struct ErrorInfo {
    ErrorKind kind = ErrorKind::StorageError;
    std::string message;

    // Only timeouts are worth retrying; everything else is a logic or
    // storage fault.
    bool retryable() const { return kind == ErrorKind::Timeout; }
};

const char* to_string(ErrorKind kind);

}  // namespace icg
