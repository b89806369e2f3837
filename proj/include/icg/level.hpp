#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace icg {

/// One consistency level advertised by a binding. Levels are ordered by
/// rank, 0 being the weakest. Within one binding's list, ranks are strictly
/// increasing and names unique.
struct ConsistencyLevel {
    uint32_t rank = 0;
    std::string name;

    bool operator==(const ConsistencyLevel& other) const = default;
};

inline ConsistencyLevel level(uint32_t rank, std::string name) {
    return ConsistencyLevel{rank, std::move(name)};
}

/// True if `levels` is non-empty and strictly increasing in rank with
/// unique names.
bool valid_level_list(const std::vector<ConsistencyLevel>& levels);

}  // namespace icg
