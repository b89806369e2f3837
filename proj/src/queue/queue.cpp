#include "icg/queue/queue.hpp"

#include <memory>
#include <stdexcept>

namespace icg::queue {

std::string encode_position(int64_t position) {
    std::string out(8, '\0');
    auto u = static_cast<uint64_t>(position);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    return out;
}

std::string encode_item(const QueueItem& item) {
    return encode_position(item.position) + item.payload;
}

std::optional<QueueItem> decode_item(std::string_view bytes) {
    if (bytes.size() < 8) return std::nullopt;
    uint64_t u = 0;
    for (int i = 0; i < 8; ++i) {
        u |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[i]))
             << (8 * i);
    }
    return QueueItem{std::string(bytes.substr(8)), static_cast<int64_t>(u)};
}

QueueCluster::QueueCluster(sim::SimNet& net, QueueConfig config,
                           std::vector<std::string> replica_nodes)
    : net_(net),
      clock_(net.clock()),
      config_(config),
      nodes_(std::move(replica_nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("queue cluster needs replicas");
    if (config_.leader < 0 || config_.leader >= replica_count()) {
        throw std::invalid_argument("leader index out of range");
    }
    for (const auto& node : nodes_) {
        if (!net_.has_node(node)) {
            throw std::invalid_argument("replica node not on the net: " + node);
        }
    }
    replicas_.resize(nodes_.size());
}

void QueueCluster::preload(const std::vector<std::string>& payloads) {
    for (const auto& p : payloads) {
        if (p.size() > config_.payload_max) {
            throw std::invalid_argument("queue payload exceeds size bound");
        }
        for (auto& r : replicas_) {
            r.items.push_back(QueueItem{p, static_cast<int64_t>(r.items.size()) + 1});
        }
    }
}

int64_t QueueCluster::last_applied_seq(int replica) const {
    return replicas_.at(replica).last_applied_seq;
}

size_t QueueCluster::committed_size(int replica) const {
    const Replica& r = replicas_.at(replica);
    return r.items.size() - r.head;
}

size_t QueueCluster::enqueue_count(int replica) const {
    return replicas_.at(replica).items.size();
}

std::optional<QueueItem> QueueCluster::committed_at(int replica,
                                                    size_t index) const {
    const Replica& r = replicas_.at(replica);
    const size_t i = r.head + index;
    if (i >= r.items.size()) return std::nullopt;
    return r.items[i];
}

std::optional<QueueItem> QueueCluster::committed_head(int replica) const {
    return committed_at(replica, 0);
}

QueueItem QueueCluster::log_at(int replica, size_t index) const {
    return replicas_.at(replica).items.at(index);
}

void QueueCluster::contact_enqueue(
    int contact, const std::string& client_node, std::string payload,
    bool want_weak, bool want_strong, uint64_t op_id,
    std::function<void(bool, std::string, bool)> deliver) {
    if (payload.size() > config_.payload_max) {
        throw std::invalid_argument("queue payload exceeds size bound");
    }
    Replica& r = replicas_[contact];
    Session session;
    session.client_node = client_node;
    session.want_strong = want_strong;
    session.deliver = deliver;

    if (want_weak) {
        // Simulate the enqueue on local state: the position it would get if
        // everything this replica knows about committed first.
        const int64_t provisional = static_cast<int64_t>(r.items.size()) +
                                    r.pending_enqueues + 1;
        session.weak_sent = true;
        session.weak_value = encode_position(provisional);
        net_.send(nodes_[contact], client_node, 8, sim::Attribution::op(op_id),
                  [deliver, value = session.weak_value] {
                      deliver(false, value, false);
                  });
    }
    r.pending_enqueues += 1;
    sessions_[op_id] = std::move(session);

    LogEntry entry;
    entry.kind = OpKind::Enqueue;
    entry.payload = std::move(payload);
    entry.op_id = op_id;
    entry.origin = contact;
    forward_to_leader(contact, std::move(entry));
}

void QueueCluster::contact_dequeue(
    int contact, const std::string& client_node, bool want_weak,
    bool want_strong, uint64_t op_id,
    std::function<void(bool, std::string, bool)> deliver) {
    Replica& r = replicas_[contact];
    Session session;
    session.client_node = client_node;
    session.want_strong = want_strong;
    session.deliver = deliver;

    if (want_weak) {
        // Peek at the committed head without removing it.
        std::string value;
        if (r.head < r.items.size()) value = encode_item(r.items[r.head]);
        session.weak_sent = true;
        session.weak_value = value;
        net_.send(nodes_[contact], client_node, value.size(),
                  sim::Attribution::op(op_id), [deliver, value] {
                      deliver(false, value, false);
                  });
    }
    sessions_[op_id] = std::move(session);

    LogEntry entry;
    entry.kind = OpKind::Dequeue;
    entry.op_id = op_id;
    entry.origin = contact;
    forward_to_leader(contact, std::move(entry));
}

void QueueCluster::forward_to_leader(int contact, LogEntry entry) {
    if (contact == config_.leader) {
        leader_receive(std::move(entry));
        return;
    }
    const uint64_t bytes = entry.payload.size() + 8;
    net_.send(nodes_[contact], nodes_[config_.leader], bytes,
              sim::Attribution::op(entry.op_id),
              [this, entry = std::move(entry)] { leader_receive(entry); });
}

void QueueCluster::leader_receive(LogEntry entry) {
    const int64_t seq = ++next_seq_;
    const uint64_t op_id = entry.op_id;
    Round& round = rounds_[seq];
    round.entry = std::move(entry);
    round.acks = 1;  // the leader itself
    for (int r = 0; r < replica_count(); ++r) {
        if (r == config_.leader) continue;
        net_.send(nodes_[config_.leader], nodes_[r],
                  round.entry.payload.size() + 8, sim::Attribution::op(op_id),
                  [this, r, seq, e = round.entry] {
                      replicas_[r].staged[seq] = e;
                      net_.send(nodes_[r], nodes_[config_.leader], 0,
                                sim::Attribution::op(e.op_id),
                                [this, seq] { leader_ack(seq); });
                  });
    }
    leader_commit_ready();
}

void QueueCluster::leader_ack(int64_t seq) {
    auto it = rounds_.find(seq);
    if (it == rounds_.end()) return;
    it->second.acks += 1;
    leader_commit_ready();
}

void QueueCluster::leader_commit_ready() {
    // Commit strictly in sequence order once the majority is in.
    while (true) {
        auto it = rounds_.find(commit_cursor_ + 1);
        if (it == rounds_.end() || it->second.acks < majority()) return;
        commit_cursor_ += 1;
        const int64_t seq = it->first;
        const LogEntry entry = it->second.entry;
        rounds_.erase(it);

        Replica& lr = replicas_[config_.leader];
        lr.staged[seq] = entry;
        lr.commit_marks_[seq] = true;
        replica_try_apply(config_.leader);

        for (int r = 0; r < replica_count(); ++r) {
            if (r == config_.leader) continue;
            net_.send(nodes_[config_.leader], nodes_[r], 0,
                      sim::Attribution::op(entry.op_id), [this, r, seq] {
                          replicas_[r].commit_marks_[seq] = true;
                          replica_try_apply(r);
                      });
        }
    }
}

void QueueCluster::replica_try_apply(int replica) {
    Replica& r = replicas_[replica];
    while (true) {
        const int64_t next = r.last_applied_seq + 1;
        if (!r.commit_marks_.count(next) || !r.staged.count(next)) return;
        const LogEntry entry = r.staged[next];
        r.staged.erase(next);
        r.commit_marks_.erase(next);
        r.last_applied_seq = next;
        const std::string result = apply(replica, entry);

        if (replica != entry.origin) continue;
        if (entry.kind == OpKind::Enqueue) r.pending_enqueues -= 1;

        auto sit = sessions_.find(entry.op_id);
        if (sit == sessions_.end()) continue;
        Session session = std::move(sit->second);
        sessions_.erase(sit);
        if (!session.want_strong) continue;

        const bool confirm = session.weak_sent && result == session.weak_value;
        const uint64_t bytes =
            confirm ? sim::SimNet::kDigestBytes : result.size();
        net_.send(nodes_[replica], session.client_node, bytes,
                  sim::Attribution::op(entry.op_id),
                  [deliver = session.deliver, result, confirm] {
                      deliver(true, confirm ? std::string() : result, confirm);
                  });
    }
}

std::string QueueCluster::apply(int replica, const LogEntry& entry) {
    Replica& r = replicas_[replica];
    switch (entry.kind) {
        case OpKind::Enqueue: {
            QueueItem item{entry.payload,
                           static_cast<int64_t>(r.items.size()) + 1};
            r.items.push_back(item);
            // the enqueue result is the committed position (the weak view
            // carried the provisional one in the same encoding)
            return encode_position(item.position);
        }
        case OpKind::Dequeue: {
            if (r.head >= r.items.size()) return std::string();
            return encode_item(r.items[r.head++]);
        }
        case OpKind::RemoveAt: {
            if (r.head < r.items.size() &&
                r.items[r.head].position == entry.remove_position) {
                return encode_item(r.items[r.head++]);
            }
            return std::string();
        }
    }
    return std::string();
}

void QueueCluster::naive_dequeue(
    const std::string& client_node, int contact, uint64_t op_id,
    std::function<void(std::optional<QueueItem>)> done) {
    // Step 1: fetch the whole visible queue.
    net_.send(client_node, nodes_[contact], 0, sim::Attribution::op(op_id),
              [this, client_node, contact, op_id, done] {
                  const Replica& r = replicas_[contact];
                  uint64_t bytes = 0;
                  for (size_t i = r.head; i < r.items.size(); ++i) {
                      bytes += 8 + r.items[i].payload.size();
                  }
                  std::optional<QueueItem> head;
                  if (r.head < r.items.size()) head = r.items[r.head];
                  net_.send(nodes_[contact], client_node, bytes,
                            sim::Attribution::op(op_id),
                            [this, client_node, contact, op_id, done, head] {
                                if (!head) {
                                    done(std::nullopt);
                                    return;
                                }
                                // Step 2: remove the head we saw, through
                                // the ordinary commit path.
                                Session session;
                                session.client_node = client_node;
                                session.want_strong = true;
                                session.deliver = [done](bool, std::string v,
                                                         bool) {
                                    done(decode_item(v));
                                };
                                net_.send(
                                    client_node, nodes_[contact], 8,
                                    sim::Attribution::op(op_id),
                                    [this, contact, op_id, head, session] {
                                        sessions_[op_id] = session;
                                        LogEntry entry;
                                        entry.kind = OpKind::RemoveAt;
                                        entry.remove_position = head->position;
                                        entry.op_id = op_id;
                                        entry.origin = contact;
                                        forward_to_leader(contact, entry);
                                    });
                            });
              });
}

const ConsistencyLevel QueueBinding::kWeak{0, "weak"};
const ConsistencyLevel QueueBinding::kStrong{1, "strong"};

QueueBinding::QueueBinding(QueueCluster& cluster, std::string client_node,
                           int contact)
    : cluster_(cluster),
      client_node_(std::move(client_node)),
      contact_(contact) {
    if (contact_ < 0 || contact_ >= cluster_.replica_count()) {
        throw std::invalid_argument("contact index out of range");
    }
    if (!cluster_.net().has_node(client_node_)) {
        throw std::invalid_argument("client node not on the net: " +
                                    client_node_);
    }
}

std::vector<ConsistencyLevel> QueueBinding::consistency_levels() const {
    return {kWeak, kStrong};
}

namespace {

struct PendingOp {
    int views_expected = 0;
    int views_seen = 0;
    bool failed = false;
    sim::SimClock::EventId timer = 0;
};

}  // namespace

void QueueBinding::submit_operation(const Operation& op,
                                    const std::vector<ConsistencyLevel>& levels,
                                    SubmitCallback callback) {
    sim::SimNet& net = cluster_.net();
    sim::SimClock& clock = net.clock();
    const uint64_t op_id = net.new_op_id();
    const std::string& contact_node = cluster_.replica_node(contact_);

    bool want_weak = false, want_strong = false;
    for (const auto& l : levels) {
        if (l == kWeak) want_weak = true;
        if (l == kStrong) want_strong = true;
    }

    auto pending = std::make_shared<PendingOp>();
    pending->views_expected = static_cast<int>(levels.size());
    pending->timer = clock.schedule_after(
        cluster_.config().op_timeout_ms, [pending, callback] {
            if (pending->views_seen >= pending->views_expected) return;
            pending->failed = true;
            callback(ErrorInfo{ErrorKind::Timeout,
                               "queue operation timed out"});
        });

    auto emit = [pending, callback, &clock](bool is_strong, std::string value,
                                            bool confirmation) {
        if (pending->failed) return;
        View v;
        v.value = std::move(value);
        v.level = is_strong ? kStrong : kWeak;
        v.is_confirmation = confirmation;
        v.arrival_ms = clock.now();
        if (++pending->views_seen >= pending->views_expected) {
            clock.cancel(pending->timer);
        }
        callback(std::move(v));
    };

    switch (op.kind) {
        case Operation::Kind::Enqueue: {
            if (op.payload->size() > cluster_.config().payload_max) {
                clock.cancel(pending->timer);
                callback(ErrorInfo{ErrorKind::StorageError,
                                   "enqueue payload exceeds the size bound"});
                break;
            }
            net.send(client_node_, contact_node, op.payload->size(),
                     sim::Attribution::op(op_id),
                     [this, payload = *op.payload, want_weak, want_strong,
                      op_id, emit]() mutable {
                         cluster_.contact_enqueue(contact_, client_node_,
                                                  std::move(payload), want_weak,
                                                  want_strong, op_id, emit);
                     });
            break;
        }
        case Operation::Kind::Dequeue: {
            net.send(client_node_, contact_node, 0, sim::Attribution::op(op_id),
                     [this, want_weak, want_strong, op_id, emit] {
                         cluster_.contact_dequeue(contact_, client_node_,
                                                  want_weak, want_strong, op_id,
                                                  emit);
                     });
            break;
        }
        default: {
            clock.cancel(pending->timer);
            callback(ErrorInfo{ErrorKind::StorageError,
                               "the queue binding supports only enqueue and "
                               "dequeue"});
            break;
        }
    }
}

}  // namespace icg::queue
