#include "icg/quorum/store.hpp"

#include <algorithm>
#include <stdexcept>

namespace icg::quorum {

VersionedValue merge_lww(const std::vector<VersionedValue>& versions) {
    if (versions.empty()) {
        throw std::invalid_argument("merge_lww needs at least one version");
    }
    const VersionedValue* best = &versions.front();
    for (const auto& v : versions) {
        if (version_less(*best, v)) best = &v;
    }
    return *best;
}

uint64_t digest64(std::string_view bytes) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

QuorumCluster::QuorumCluster(sim::SimNet& net, QuorumConfig config,
                             std::vector<std::string> replica_nodes,
                             uint64_t seed)
    : net_(net),
      clock_(net.clock()),
      config_(config),
      nodes_(std::move(replica_nodes)),
      rng_(seed) {
    const int n = replica_count();
    if (n < 1) throw std::invalid_argument("quorum cluster needs replicas");
    if (!(1 <= config_.r_weak && config_.r_weak < config_.r_strong &&
          config_.r_strong <= n)) {
        throw std::invalid_argument("require 1 <= r_weak < r_strong <= N");
    }
    if (!(1 <= config_.w && config_.w <= n)) {
        throw std::invalid_argument("require 1 <= W <= N");
    }
    for (const auto& node : nodes_) {
        if (!net_.has_node(node)) {
            throw std::invalid_argument("replica node not on the net: " + node);
        }
    }
    stores_.resize(n);
}

void QuorumCluster::preload(const std::string& key, const std::string& value) {
    for (int r = 0; r < replica_count(); ++r) {
        stores_[r][key] = VersionedValue{value, 0.0, -1};
    }
}

VersionedValue QuorumCluster::replica_version(int replica,
                                              const std::string& key) const {
    return local_read(replica, key);
}

void QuorumCluster::apply(int replica, const std::string& key,
                          const VersionedValue& v) {
    auto& slot = stores_[replica][key];
    if (version_less(slot, v)) slot = v;
}

VersionedValue QuorumCluster::local_read(int replica,
                                         const std::string& key) const {
    auto it = stores_[replica].find(key);
    return it == stores_[replica].end() ? VersionedValue{} : it->second;
}

std::vector<int> QuorumCluster::peers_by_latency(int coordinator) const {
    std::vector<int> peers;
    for (int r = 0; r < replica_count(); ++r) {
        if (r != coordinator) peers.push_back(r);
    }
    std::stable_sort(peers.begin(), peers.end(), [&](int a, int b) {
        return net_.latency_ms(nodes_[coordinator], nodes_[a]) <
               net_.latency_ms(nodes_[coordinator], nodes_[b]);
    });
    return peers;
}

double QuorumCluster::draw_lag() {
    const double span = config_.lag_max_ms - config_.lag_min_ms;
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return config_.lag_min_ms + u * span;
}

void QuorumCluster::coordinator_read(
    int coordinator, const std::string& client_node, const std::string& key,
    bool want_weak, bool want_strong, uint64_t op_id,
    std::function<void(bool, std::string, bool)> deliver) {
    ReadSession& session = reads_[op_id];
    const VersionedValue local = local_read(coordinator, key);
    session.responses.push_back(local);

    if (want_weak) {
        session.prelim_sent = true;
        session.prelim_digest = digest64(local.value);
        net_.send(nodes_[coordinator], client_node, local.value.size(),
                  sim::Attribution::op(op_id),
                  [deliver, value = local.value] {
                      deliver(false, value, false);
                  });
        if (!want_strong) {
            reads_.erase(op_id);
            return;
        }
    }

    // Gather the strong quorum: the local read counts, the other replicas
    // are queried in parallel.
    for (int peer : peers_by_latency(coordinator)) {
        net_.send(
            nodes_[coordinator], nodes_[peer], key.size(),
            sim::Attribution::op(op_id), [this, coordinator, peer, key,
                                          client_node, op_id, deliver] {
                const VersionedValue remote = local_read(peer, key);
                net_.send(nodes_[peer], nodes_[coordinator],
                          remote.value.size(), sim::Attribution::op(op_id),
                          [this, coordinator, client_node, op_id, remote,
                           deliver] {
                              auto it = reads_.find(op_id);
                              if (it == reads_.end() || it->second.closed)
                                  return;
                              it->second.responses.push_back(remote);
                              finish_read(coordinator, client_node, op_id,
                                          it->second, deliver);
                          });
            });
    }
}

void QuorumCluster::finish_read(
    int coordinator, const std::string& client_node, uint64_t op_id,
    ReadSession& session,
    const std::function<void(bool, std::string, bool)>& deliver) {
    if (static_cast<int>(session.responses.size()) < config_.r_strong) return;
    session.closed = true;

    const VersionedValue merged = merge_lww(session.responses);
    const bool confirm = session.prelim_sent && config_.confirmations &&
                         !config_.force_full_finals &&
                         digest64(merged.value) == session.prelim_digest;
    if (confirm) {
        ++confirmations_sent_;
        net_.send(nodes_[coordinator], client_node, sim::SimNet::kDigestBytes,
                  sim::Attribution::op(op_id),
                  [deliver] { deliver(true, std::string(), true); });
    } else {
        ++full_finals_sent_;
        net_.send(nodes_[coordinator], client_node, merged.value.size(),
                  sim::Attribution::op(op_id),
                  [deliver, value = merged.value] {
                      deliver(true, value, false);
                  });
    }
    reads_.erase(op_id);
}

void QuorumCluster::coordinator_write(int coordinator,
                                      const std::string& client_node,
                                      const std::string& key, std::string value,
                                      uint64_t op_id,
                                      std::function<void()> ack) {
    const VersionedValue version{std::move(value), clock_.now(), coordinator};
    apply(coordinator, key, version);

    const auto peers = peers_by_latency(coordinator);
    const int sync_peers = config_.w - 1;

    auto send_ack = [this, coordinator, client_node, op_id, ack] {
        net_.send(nodes_[coordinator], client_node, 0,
                  sim::Attribution::op(op_id), ack);
    };

    if (sync_peers <= 0) {
        send_ack();
    } else {
        write_acks_[op_id] = 1;  // local apply
        for (int i = 0; i < sync_peers; ++i) {
            const int peer = peers[i];
            net_.send(nodes_[coordinator], nodes_[peer],
                      key.size() + version.value.size(),
                      sim::Attribution::op(op_id),
                      [this, coordinator, peer, key, version, op_id,
                       send_ack] {
                          apply(peer, key, version);
                          net_.send(nodes_[peer], nodes_[coordinator], 0,
                                    sim::Attribution::op(op_id),
                                    [this, op_id, send_ack] {
                                        auto it = write_acks_.find(op_id);
                                        if (it == write_acks_.end()) return;
                                        if (++it->second >= config_.w) {
                                            write_acks_.erase(it);
                                            send_ack();
                                        }
                                    });
                      });
        }
    }

    // The replicas outside the synchronous write set converge via
    // anti-entropy after the replication lag.
    for (size_t i = std::max(sync_peers, 0); i < peers.size(); ++i) {
        const int peer = peers[i];
        const double lag = draw_lag();
        clock_.schedule_after(lag, [this, coordinator, peer, key, version] {
            net_.send(nodes_[coordinator], nodes_[peer],
                      key.size() + version.value.size(),
                      sim::Attribution::background(),
                      [this, peer, key, version] { apply(peer, key, version); });
        });
    }
}

const ConsistencyLevel QuorumBinding::kWeak{0, "weak"};
const ConsistencyLevel QuorumBinding::kStrong{1, "strong"};

QuorumBinding::QuorumBinding(QuorumCluster& cluster, std::string client_node,
                             int coordinator)
    : cluster_(cluster),
      client_node_(std::move(client_node)),
      coordinator_(coordinator) {
    if (coordinator_ < 0 || coordinator_ >= cluster_.replica_count()) {
        throw std::invalid_argument("coordinator index out of range");
    }
    if (!cluster_.net().has_node(client_node_)) {
        throw std::invalid_argument("client node not on the net: " +
                                    client_node_);
    }
}

std::vector<ConsistencyLevel> QuorumBinding::consistency_levels() const {
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

void QuorumBinding::submit_operation(const Operation& op,
                                     const std::vector<ConsistencyLevel>& levels,
                                     SubmitCallback callback) {
    sim::SimNet& net = cluster_.net();
    sim::SimClock& clock = net.clock();
    const uint64_t op_id = net.new_op_id();
    const std::string& coord_node = cluster_.replica_node(coordinator_);

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
                               "operation timed out before all views arrived"});
        });

    auto emit = [pending, callback, &clock](View view) {
        if (pending->failed) return;
        view.arrival_ms = clock.now();
        if (++pending->views_seen >= pending->views_expected) {
            clock.cancel(pending->timer);
        }
        callback(std::move(view));
    };

    switch (op.kind) {
        case Operation::Kind::Read:
        case Operation::Kind::AppSpecific: {
            net.send(client_node_, coord_node, op.key.size(),
                     sim::Attribution::op(op_id),
                     [this, key = op.key, want_weak, want_strong, op_id, emit] {
                         cluster_.coordinator_read(
                             coordinator_, client_node_, key, want_weak,
                             want_strong, op_id,
                             [emit](bool is_strong, std::string value,
                                    bool confirmation) {
                                 View v;
                                 v.value = std::move(value);
                                 v.level = is_strong ? kStrong : kWeak;
                                 v.is_confirmation = confirmation;
                                 emit(std::move(v));
                             });
                     });
            break;
        }
        case Operation::Kind::Write: {
            // A write is a single acknowledgement; when several levels were
            // requested the ack is replayed at each of them so the callback
            // cardinality contract holds.
            auto requested = levels;
            net.send(client_node_, coord_node,
                     op.key.size() + op.payload->size(),
                     sim::Attribution::op(op_id),
                     [this, key = op.key, value = *op.payload, op_id, emit,
                      requested] {
                         cluster_.coordinator_write(
                             coordinator_, client_node_, key, value, op_id,
                             [emit, requested] {
                                 for (const auto& l : requested) {
                                     View v;
                                     v.level = l;
                                     emit(v);
                                 }
                             });
                     });
            break;
        }
        case Operation::Kind::Enqueue:
        case Operation::Kind::Dequeue: {
            clock.cancel(pending->timer);
            callback(ErrorInfo{ErrorKind::StorageError,
                               "queue operations are not supported by the "
                               "key-value binding"});
            break;
        }
    }
}

bool divergence_probe(sim::SimClock& clock, Library& lib,
                      const std::string& key) {
    auto c = lib.invoke(Operation::read(key));
    while (!c.is_terminal() && clock.run_until_idle() > 0) {
    }
    if (c.state() != CorrectableState::Final) {
        const auto err = c.error();
        throw std::runtime_error(
            std::string("divergence probe failed: ") +
            (err ? to_string(err->kind) : "read never completed"));
    }
    const auto prelims = c.delivered_views();
    if (prelims.empty()) {
        throw std::runtime_error("divergence probe got no preliminary view");
    }
    return prelims.front().value != c.final_view()->value;
}

}  // namespace icg::quorum
