#pragma once

#include <memory>
#include <optional>

#include "icg/binding.hpp"
#include "icg/correctable.hpp"

namespace icg {

/// The application-facing API. A Library instance always uses one specific
/// binding; it translates invocations into binding submissions and routes
/// the resulting views into a correctable.
///
/// The instance is shareable across application threads; each invocation is
/// independent and no ordering across invocations is guaranteed.
class Library {
public:
    explicit Library(std::shared_ptr<Binding> binding);

    /// Requests the operation at the given consistency levels (all
    /// advertised levels when absent). The correctable receives one view
    /// per requested level in rank order; the strongest closes it.
    Correctable invoke(const Operation& op,
                       std::optional<std::vector<ConsistencyLevel>> levels =
                           std::nullopt);

    /// invoke with only the weakest advertised level: a single fast view
    /// closes the correctable.
    Correctable invoke_weak(const Operation& op);

    /// invoke with only the strongest advertised level.
    Correctable invoke_strong(const Operation& op);

    const std::vector<ConsistencyLevel>& levels() const { return levels_; }
    ConsistencyLevel level_named(const std::string& name) const;
    std::shared_ptr<Diagnostics> diagnostics() const { return diagnostics_; }

private:
    std::shared_ptr<Binding> binding_;
    std::vector<ConsistencyLevel> levels_;
    std::shared_ptr<Diagnostics> diagnostics_;
};

}  // namespace icg
