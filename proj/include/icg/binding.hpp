#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "icg/operation.hpp"
#include "icg/view.hpp"

namespace icg {

/// What a binding hands back for one submission: a view per requested
/// level, or an error that terminates the sequence.
using ViewResult = std::variant<View, ErrorInfo>;
using SubmitCallback = std::function<void(ViewResult)>;

/// The storage-binding contract. A binding encapsulates everything that is
/// storage specific: topology, protocols, coherence. It must invoke the
/// callback once for each requested consistency level, in rank order, or
/// terminate the sequence with an error.
class Binding {
public:
    virtual ~Binding() = default;

    /// The supported levels, ordered weakest to strongest. Stable across
    /// calls.
    virtual std::vector<ConsistencyLevel> consistency_levels() const = 0;

    /// Executes `op`, firing `callback` once per level in `levels` in rank
    /// order. Levels outside `levels` are skipped entirely (no extraneous
    /// work, nothing on the wire for them).
    virtual void submit_operation(const Operation& op,
                                  const std::vector<ConsistencyLevel>& levels,
                                  SubmitCallback callback) = 0;
};

}  // namespace icg
