#include "icg/library.hpp"

#include <algorithm>
#include <stdexcept>

namespace icg {

bool operation_well_formed(const Operation& op) {
    switch (op.kind) {
        case Operation::Kind::Write:
        case Operation::Kind::Enqueue:
            return op.payload.has_value();
        case Operation::Kind::Read:
        case Operation::Kind::Dequeue:
            return !op.payload.has_value();
        case Operation::Kind::AppSpecific:
            return true;
    }
    return false;
}

Library::Library(std::shared_ptr<Binding> binding)
    : binding_(std::move(binding)),
      diagnostics_(std::make_shared<Diagnostics>()) {
    if (!binding_) throw std::invalid_argument("binding must not be null");
    levels_ = binding_->consistency_levels();
    if (!valid_level_list(levels_)) {
        throw std::invalid_argument("binding advertises an invalid level list");
    }
}

ConsistencyLevel Library::level_named(const std::string& name) const {
    for (const auto& l : levels_) {
        if (l.name == name) return l;
    }
    throw std::invalid_argument("unknown consistency level: " + name);
}

Correctable Library::invoke(
    const Operation& op,
    std::optional<std::vector<ConsistencyLevel>> levels) {
    if (!operation_well_formed(op)) {
        throw std::invalid_argument("operation payload does not match its kind");
    }

    std::vector<ConsistencyLevel> requested =
        levels.has_value() ? std::move(*levels) : levels_;
    if (requested.empty()) {
        throw std::invalid_argument("requested level set must not be empty");
    }
    std::sort(requested.begin(), requested.end(),
              [](const auto& a, const auto& b) { return a.rank < b.rank; });
    requested.erase(std::unique(requested.begin(), requested.end()),
                    requested.end());
    for (const auto& l : requested) {
        if (std::find(levels_.begin(), levels_.end(), l) == levels_.end()) {
            throw std::invalid_argument(
                "requested level not advertised by the binding: " + l.name);
        }
    }

    auto [correctable, completer] = make_correctable(requested, diagnostics_);
    const uint32_t closing_rank = requested.back().rank;

    binding_->submit_operation(
        op, requested, [completer, closing_rank](ViewResult result) {
            if (std::holds_alternative<ErrorInfo>(result)) {
                completer.close_error(std::get<ErrorInfo>(std::move(result)));
                return;
            }
            View view = std::get<View>(std::move(result));
            if (view.level.rank == closing_rank) {
                completer.close_final(std::move(view));
            } else {
                completer.deliver_update(std::move(view));
            }
        });
    return correctable;
}

Correctable Library::invoke_weak(const Operation& op) {
    return invoke(op, std::vector<ConsistencyLevel>{levels_.front()});
}

Correctable Library::invoke_strong(const Operation& op) {
    return invoke(op, std::vector<ConsistencyLevel>{levels_.back()});
}

}  // namespace icg
