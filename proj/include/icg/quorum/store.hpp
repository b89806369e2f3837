#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "icg/binding.hpp"
#include "icg/library.hpp"
#include "icg/sim/net.hpp"

namespace icg::quorum {

struct QuorumConfig {
    int r_weak = 1;    // replicas behind the preliminary view
    int r_strong = 2;  // replicas behind the final view, 2..N
    int w = 1;         // synchronous write acknowledgements

    // Delay before a committed write is pushed to the replicas that did not
    // take part in the synchronous write, drawn uniformly per target.
    double lag_min_ms = 5.0;
    double lag_max_ms = 50.0;

    bool confirmations = true;       // elide equal finals into confirmations
    bool force_full_finals = false;  // oracle mode: never confirm
    double op_timeout_ms = 1000.0;
};

/// One version of a key under last-write-wins. (timestamp, writer_replica)
/// totally orders versions; an absent key is modeled as timestamp -1.
struct VersionedValue {
    std::string value;
    double timestamp = -1.0;
    int writer_replica = -1;

    bool absent() const { return timestamp < 0.0; }
    bool operator==(const VersionedValue&) const = default;
};

inline bool version_less(const VersionedValue& a, const VersionedValue& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.writer_replica < b.writer_replica;
}

/// Last-write-wins reconciliation: the greatest version by
/// (timestamp, writer_replica). Throws std::invalid_argument on an empty
/// list.
VersionedValue merge_lww(const std::vector<VersionedValue>& versions);

/// 8-byte deterministic digest (FNV-1a) used by confirmation messages.
uint64_t digest64(std::string_view bytes);

/// An N-replica last-write-wins key-value store. The coordinator (always
/// one of the replicas, the client's contact node) flushes a preliminary
/// view from its local read before gathering the strong quorum, and elides
/// the final view into a confirmation when its digest matches the
/// preliminary.
class QuorumCluster {
public:
    QuorumCluster(sim::SimNet& net, QuorumConfig config,
                  std::vector<std::string> replica_nodes, uint64_t seed);

    int replica_count() const { return static_cast<int>(nodes_.size()); }
    const std::string& replica_node(int replica) const {
        return nodes_.at(replica);
    }
    const QuorumConfig& config() const { return config_; }
    QuorumConfig& config() { return config_; }
    sim::SimNet& net() { return net_; }

    /// Installs a key on every replica directly (timestamp 0), bypassing
    /// the wire. Used to set up datasets.
    void preload(const std::string& key, const std::string& value);

    VersionedValue replica_version(int replica, const std::string& key) const;

    /// Server-side read entry, invoked when the client's request message
    /// arrives at the coordinator. `deliver` runs at the client when a view
    /// message lands there: (is_strong_level, value, is_confirmation).
    void coordinator_read(
        int coordinator, const std::string& client_node, const std::string& key,
        bool want_weak, bool want_strong, uint64_t op_id,
        std::function<void(bool, std::string, bool)> deliver);

    /// Server-side write entry. `ack` runs at the client when the write
    /// acknowledgement arrives.
    void coordinator_write(int coordinator, const std::string& client_node,
                           const std::string& key, std::string value,
                           uint64_t op_id, std::function<void()> ack);

    uint64_t confirmations_sent() const { return confirmations_sent_; }
    uint64_t full_finals_sent() const { return full_finals_sent_; }

private:
    struct ReadSession {
        std::vector<VersionedValue> responses;
        bool prelim_sent = false;
        uint64_t prelim_digest = 0;
        bool closed = false;
    };

    void apply(int replica, const std::string& key, const VersionedValue& v);
    VersionedValue local_read(int replica, const std::string& key) const;
    std::vector<int> peers_by_latency(int coordinator) const;
    double draw_lag();
    void finish_read(int coordinator, const std::string& client_node,
                     uint64_t op_id, ReadSession& session,
                     const std::function<void(bool, std::string, bool)>& deliver);

    sim::SimNet& net_;
    sim::SimClock& clock_;
    QuorumConfig config_;
    std::vector<std::string> nodes_;
    std::vector<std::map<std::string, VersionedValue>> stores_;
    std::map<uint64_t, ReadSession> reads_;
    std::map<uint64_t, int> write_acks_;
    std::mt19937_64 rng_;
    uint64_t confirmations_sent_ = 0;
    uint64_t full_finals_sent_ = 0;
};

/// Client-side binding for QuorumCluster: levels weak(0) / strong(1).
/// Reads flow through the coordinator's preliminary flushing; writes are
/// acknowledged after W replicas apply. AppSpecific operations are treated
/// as keyed reads.
class QuorumBinding : public Binding {
public:
    static const ConsistencyLevel kWeak;
    static const ConsistencyLevel kStrong;

    QuorumBinding(QuorumCluster& cluster, std::string client_node,
                  int coordinator);

    std::vector<ConsistencyLevel> consistency_levels() const override;
    void submit_operation(const Operation& op,
                          const std::vector<ConsistencyLevel>& levels,
                          SubmitCallback callback) override;

    const std::string& client_node() const { return client_node_; }
    int coordinator() const { return coordinator_; }

private:
    QuorumCluster& cluster_;
    std::string client_node_;
    int coordinator_;
};

/// Issues an ICG read of `key` through `lib`, pumps the clock until it
/// closes, and reports whether the preliminary view differed from the
/// final one. Read errors propagate as exceptions of the ErrorInfo kind.
bool divergence_probe(sim::SimClock& clock, Library& lib,
                      const std::string& key);

}  // namespace icg::quorum
