#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "icg/binding.hpp"
#include "icg/sim/net.hpp"

namespace icg::tiered {

struct TieredConfig {
    // Delay before a primary write is pushed to the backup (the staleness
    // injection knob).
    double backup_lag_ms = 25.0;
    double op_timeout_ms = 1000.0;
};

/// Primary-backup storage: the primary is the unique write serializer and
/// assigns a monotone version per key; the backup trails it by the
/// configured lag.
class TieredStore {
public:
    TieredStore(sim::SimNet& net, TieredConfig config, std::string primary_node,
                std::string backup_node);

    const std::string& primary_node() const { return primary_node_; }
    const std::string& backup_node() const { return backup_node_; }
    const TieredConfig& config() const { return config_; }
    TieredConfig& config() { return config_; }
    sim::SimNet& net() { return net_; }

    /// Installs a key at version 1 on both tiers, bypassing the wire.
    void preload(const std::string& key, const std::string& value);

    /// Applies a write at the primary as if another client issued it (no
    /// write-through into any local cache); the backup converges after the
    /// configured lag.
    void inject_primary_write(const std::string& key, const std::string& value);

    /// Drops write requests at the primary (they time out client-side).
    void set_primary_reachable(bool reachable);

    std::optional<std::string> primary_value(const std::string& key) const;
    std::optional<std::string> backup_value(const std::string& key) const;
    uint64_t primary_version(const std::string& key) const;
    uint64_t backup_version(const std::string& key) const;

    /// Server read entry; tier 0 = backup, 1 = primary. `deliver` runs at
    /// the client with (value-or-empty, version).
    void tier_read(bool primary, const std::string& client_node,
                   const std::string& key, uint64_t op_id,
                   std::function<void(std::string, uint64_t)> deliver);

    /// Server write entry at the primary. `ack` runs at the client with the
    /// assigned version.
    void primary_write(const std::string& client_node, const std::string& key,
                       std::string value, uint64_t op_id,
                       std::function<void(uint64_t)> ack);

private:
    struct Entry {
        std::string value;
        uint64_t version = 0;
    };

    sim::SimNet& net_;
    sim::SimClock& clock_;
    TieredConfig config_;
    std::string primary_node_;
    std::string backup_node_;
    std::map<std::string, Entry> primary_;
    std::map<std::string, Entry> backup_;
    bool primary_reachable_ = true;
};

struct CacheEntry {
    std::string value;
    uint64_t version = 0;
    double cached_at_ms = 0.0;
};

/// Three-level binding over TieredStore plus a client-local write-through
/// cache: cache(0) resolves locally and immediately, backup(1) is the
/// closer replica, primary(2) the authoritative one. A cache miss skips the
/// cache view (the next level becomes the first delivered view) unless the
/// cache is the only requested level, in which case a not-found view
/// closes the correctable. The closing view of a read refreshes the cache;
/// writes go to the primary and update the cache synchronously with the
/// acknowledgement.
class TieredBinding : public Binding {
public:
    static const ConsistencyLevel kCache;
    static const ConsistencyLevel kBackup;
    static const ConsistencyLevel kPrimary;

    TieredBinding(TieredStore& store, std::string client_node);

    std::vector<ConsistencyLevel> consistency_levels() const override;
    void submit_operation(const Operation& op,
                          const std::vector<ConsistencyLevel>& levels,
                          SubmitCallback callback) override;

    bool cache_contains(const std::string& key) const;
    std::optional<CacheEntry> cache_entry(const std::string& key) const;
    void drop_cache_entry(const std::string& key);

private:
    TieredStore& store_;
    std::string client_node_;
    std::map<std::string, CacheEntry> cache_;
};

}  // namespace icg::tiered
