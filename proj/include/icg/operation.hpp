#pragma once

#include <map>
#include <optional>
#include <string>

namespace icg {

/// A storage request. Write and Enqueue carry a payload; Read and Dequeue
/// must not. AppSpecific operations pass through to the binding
/// uninterpreted, identified by `name`.
struct Operation {
    enum class Kind { Read, Write, Enqueue, Dequeue, AppSpecific };

    Kind kind = Kind::Read;
    std::string key;
    std::optional<std::string> payload;
    std::string name;  // set for AppSpecific
    std::map<std::string, std::string> metadata;

    static Operation read(std::string key) {
        return Operation{Kind::Read, std::move(key), std::nullopt, {}, {}};
    }
    static Operation write(std::string key, std::string payload) {
        return Operation{Kind::Write, std::move(key), std::move(payload), {}, {}};
    }
    static Operation enqueue(std::string payload) {
        return Operation{Kind::Enqueue, {}, std::move(payload), {}, {}};
    }
    static Operation dequeue() {
        return Operation{Kind::Dequeue, {}, std::nullopt, {}, {}};
    }
    static Operation app(std::string name, std::string key) {
        return Operation{Kind::AppSpecific, std::move(key), std::nullopt,
                         std::move(name), {}};
    }
};

/// True iff payload presence matches the operation kind.
bool operation_well_formed(const Operation& op);

}  // namespace icg
