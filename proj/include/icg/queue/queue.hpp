#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icg/binding.hpp"
#include "icg/sim/net.hpp"

namespace icg::queue {

struct QueueConfig {
    int leader = 0;  // static leader, no election in scope
    double op_timeout_ms = 2000.0;
    size_t payload_max = 20;  // queue elements are small identifiers
};

/// One committed queue element. `position` is the 1-based commit-order
/// sequence number assigned at enqueue commit (the ticket number).
struct QueueItem {
    std::string payload;
    int64_t position = 0;

    bool operator==(const QueueItem&) const = default;
};

/// Canonical bytes of a queue view: 8-byte little-endian position followed
/// by the payload. The empty string is the null result.
std::string encode_item(const QueueItem& item);
std::optional<QueueItem> decode_item(std::string_view bytes);
std::string encode_position(int64_t position);

/// A leader-ordered replicated FIFO queue. A contact replica answers the
/// weak view by simulating the operation on its local state; the strong
/// view is the result of applying the operation after total-order commit
/// (majority-acknowledged, leader-sequenced). Committed state at every
/// replica is a prefix of the leader's.
class QueueCluster {
public:
    QueueCluster(sim::SimNet& net, QueueConfig config,
                 std::vector<std::string> replica_nodes);

    int replica_count() const { return static_cast<int>(nodes_.size()); }
    int leader() const { return config_.leader; }
    const std::string& replica_node(int r) const { return nodes_.at(r); }
    const QueueConfig& config() const { return config_; }
    sim::SimNet& net() { return net_; }

    /// Installs already-committed elements on every replica (positions
    /// starting at 1), bypassing the wire.
    void preload(const std::vector<std::string>& payloads);

    // Committed-state inspection.
    int64_t last_applied_seq(int replica) const;
    size_t committed_size(int replica) const;  // enqueued minus dequeued
    size_t enqueue_count(int replica) const;
    std::optional<QueueItem> committed_at(int replica, size_t index) const;
    std::optional<QueueItem> committed_head(int replica) const;
    /// i-th element of the replica's committed enqueue log (ignores
    /// dequeues); for prefix-agreement checks.
    QueueItem log_at(int replica, size_t index) const;

    /// Client entry: runs at the contact when the request message arrives.
    /// `deliver` runs at the client per view: (is_strong_level, value,
    /// is_confirmation).
    void contact_enqueue(int contact, const std::string& client_node,
                         std::string payload, bool want_weak, bool want_strong,
                         uint64_t op_id,
                         std::function<void(bool, std::string, bool)> deliver);
    void contact_dequeue(int contact, const std::string& client_node,
                         bool want_weak, bool want_strong, uint64_t op_id,
                         std::function<void(bool, std::string, bool)> deliver);

    /// Measurement baseline mirroring the unmodified dequeue recipe: fetch
    /// the whole visible queue, then commit a removal of its head. `done`
    /// runs at the client with the removed item (or nullopt when empty or
    /// lost to a contender).
    void naive_dequeue(const std::string& client_node, int contact,
                       uint64_t op_id,
                       std::function<void(std::optional<QueueItem>)> done);

private:
    enum class OpKind { Enqueue, Dequeue, RemoveAt };

    struct LogEntry {
        OpKind kind = OpKind::Enqueue;
        std::string payload;
        int64_t remove_position = 0;
        uint64_t op_id = 0;
        int origin = -1;  // contact replica that forwarded the op
    };

    struct Replica {
        std::vector<QueueItem> items;  // committed enqueues, positions 1..n
        size_t head = 0;               // committed dequeues applied
        int64_t last_applied_seq = 0;
        int pending_enqueues = 0;  // forwarded from here, not yet applied here
        std::map<int64_t, LogEntry> staged;     // proposals by seq
        std::map<int64_t, bool> commit_marks_;  // seqs learned committed
    };

    struct Round {
        LogEntry entry;
        int acks = 0;
        bool committed = false;
    };

    struct Session {
        std::string client_node;
        bool want_strong = false;
        bool weak_sent = false;
        std::string weak_value;
        std::function<void(bool, std::string, bool)> deliver;
    };

    int majority() const { return replica_count() / 2 + 1; }
    void forward_to_leader(int contact, LogEntry entry);
    void leader_receive(LogEntry entry);
    void leader_ack(int64_t seq);
    void leader_commit_ready();
    void replica_try_apply(int replica);
    std::string apply(int replica, const LogEntry& entry);

    sim::SimNet& net_;
    sim::SimClock& clock_;
    QueueConfig config_;
    std::vector<std::string> nodes_;
    std::vector<Replica> replicas_;
    int64_t next_seq_ = 0;
    int64_t commit_cursor_ = 0;  // highest seq committed in order
    std::map<int64_t, Round> rounds_;
    std::map<uint64_t, Session> sessions_;
};

/// Client-side binding for QueueCluster: levels weak(0) / strong(1) over
/// Enqueue and Dequeue operations. The weak dequeue view is a non-mutating
/// peek of the contact's committed head; removal happens only at commit.
class QueueBinding : public Binding {
public:
    static const ConsistencyLevel kWeak;
    static const ConsistencyLevel kStrong;

    QueueBinding(QueueCluster& cluster, std::string client_node, int contact);

    std::vector<ConsistencyLevel> consistency_levels() const override;
    void submit_operation(const Operation& op,
                          const std::vector<ConsistencyLevel>& levels,
                          SubmitCallback callback) override;

    const std::string& client_node() const { return client_node_; }
    int contact() const { return contact_; }

private:
    QueueCluster& cluster_;
    std::string client_node_;
    int contact_;
};

}  // namespace icg::queue
