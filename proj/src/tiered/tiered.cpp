#include "icg/tiered/tiered.hpp"

#include <algorithm>
#include <stdexcept>

namespace icg::tiered {

TieredStore::TieredStore(sim::SimNet& net, TieredConfig config,
                         std::string primary_node, std::string backup_node)
    : net_(net),
      clock_(net.clock()),
      config_(config),
      primary_node_(std::move(primary_node)),
      backup_node_(std::move(backup_node)) {
    if (!net_.has_node(primary_node_) || !net_.has_node(backup_node_)) {
        throw std::invalid_argument("tier nodes must be registered on the net");
    }
}

void TieredStore::preload(const std::string& key, const std::string& value) {
    primary_[key] = Entry{value, 1};
    backup_[key] = Entry{value, 1};
}

void TieredStore::inject_primary_write(const std::string& key,
                                       const std::string& value) {
    Entry& entry = primary_[key];
    entry.value = value;
    entry.version += 1;
    clock_.schedule_after(config_.backup_lag_ms,
                          [this, key, snapshot = entry] {
                              net_.send(primary_node_, backup_node_,
                                        key.size() + snapshot.value.size(),
                                        sim::Attribution::background(),
                                        [this, key, snapshot] {
                                            auto& b = backup_[key];
                                            if (snapshot.version > b.version) {
                                                b = snapshot;
                                            }
                                        });
                          });
}

void TieredStore::set_primary_reachable(bool reachable) {
    primary_reachable_ = reachable;
    net_.set_unreachable(primary_node_, !reachable);
}

std::optional<std::string> TieredStore::primary_value(
    const std::string& key) const {
    auto it = primary_.find(key);
    if (it == primary_.end()) return std::nullopt;
    return it->second.value;
}

std::optional<std::string> TieredStore::backup_value(
    const std::string& key) const {
    auto it = backup_.find(key);
    if (it == backup_.end()) return std::nullopt;
    return it->second.value;
}

uint64_t TieredStore::primary_version(const std::string& key) const {
    auto it = primary_.find(key);
    return it == primary_.end() ? 0 : it->second.version;
}

uint64_t TieredStore::backup_version(const std::string& key) const {
    auto it = backup_.find(key);
    return it == backup_.end() ? 0 : it->second.version;
}

void TieredStore::tier_read(bool primary, const std::string& client_node,
                            const std::string& key, uint64_t op_id,
                            std::function<void(std::string, uint64_t)> deliver) {
    const auto& store = primary ? primary_ : backup_;
    const std::string& node = primary ? primary_node_ : backup_node_;
    std::string value;
    uint64_t version = 0;
    if (auto it = store.find(key); it != store.end()) {
        value = it->second.value;
        version = it->second.version;
    }
    net_.send(node, client_node, value.size(), sim::Attribution::op(op_id),
              [deliver, value, version] { deliver(value, version); });
}

void TieredStore::primary_write(const std::string& client_node,
                                const std::string& key, std::string value,
                                uint64_t op_id,
                                std::function<void(uint64_t)> ack) {
    inject_primary_write(key, value);
    const uint64_t version = primary_[key].version;
    net_.send(primary_node_, client_node, 8, sim::Attribution::op(op_id),
              [ack, version] { ack(version); });
}

const ConsistencyLevel TieredBinding::kCache{0, "cache"};
const ConsistencyLevel TieredBinding::kBackup{1, "backup"};
const ConsistencyLevel TieredBinding::kPrimary{2, "primary"};

TieredBinding::TieredBinding(TieredStore& store, std::string client_node)
    : store_(store), client_node_(std::move(client_node)) {
    if (!store_.net().has_node(client_node_)) {
        throw std::invalid_argument("client node not on the net: " +
                                    client_node_);
    }
}

std::vector<ConsistencyLevel> TieredBinding::consistency_levels() const {
    return {kCache, kBackup, kPrimary};
}

bool TieredBinding::cache_contains(const std::string& key) const {
    return cache_.count(key) > 0;
}

std::optional<CacheEntry> TieredBinding::cache_entry(
    const std::string& key) const {
    auto it = cache_.find(key);
    if (it == cache_.end()) return std::nullopt;
    return it->second;
}

void TieredBinding::drop_cache_entry(const std::string& key) {
    cache_.erase(key);
}

namespace {

struct PendingOp {
    int views_expected = 0;
    int views_seen = 0;
    bool failed = false;
    sim::SimClock::EventId timer = 0;
};

// Releases tier views in rank order even when a stronger tier answers
// before a weaker one, and marks equal successive values as confirmations.
struct GetSequencer {
    std::vector<uint32_t> order;  // ranks awaiting release, ascending
    std::map<uint32_t, View> ready;
    std::map<uint32_t, uint64_t> versions;
    std::string prev_value;
    bool have_prev = false;
    uint32_t closing_rank = 0;
    std::function<void(const View&, uint64_t)> on_close;
    std::function<void(View)> emit;

    void feed(View v, uint64_t version) {
        versions[v.level.rank] = version;
        ready.emplace(v.level.rank, std::move(v));
        while (!order.empty()) {
            auto it = ready.find(order.front());
            if (it == ready.end()) return;
            View out = std::move(it->second);
            ready.erase(it);
            order.erase(order.begin());
            if (have_prev && out.value == prev_value) {
                out.is_confirmation = true;
            }
            prev_value = out.value;
            have_prev = true;
            if (out.level.rank == closing_rank) {
                on_close(out, versions[out.level.rank]);
            }
            emit(std::move(out));
        }
    }
};

}  // namespace

void TieredBinding::submit_operation(const Operation& op,
                                     const std::vector<ConsistencyLevel>& levels,
                                     SubmitCallback callback) {
    sim::SimNet& net = store_.net();
    sim::SimClock& clock = net.clock();
    const uint64_t op_id = net.new_op_id();

    bool want_cache = false, want_backup = false, want_primary = false;
    for (const auto& l : levels) {
        if (l == kCache) want_cache = true;
        if (l == kBackup) want_backup = true;
        if (l == kPrimary) want_primary = true;
    }

    if (op.kind == Operation::Kind::Write) {
        auto pending = std::make_shared<PendingOp>();
        pending->views_expected = static_cast<int>(levels.size());
        pending->timer = clock.schedule_after(
            store_.config().op_timeout_ms, [pending, callback] {
                if (pending->views_seen >= pending->views_expected) return;
                pending->failed = true;
                callback(ErrorInfo{ErrorKind::Timeout, "write timed out"});
            });
        auto requested = levels;
        net.send(client_node_, store_.primary_node(),
                 op.key.size() + op.payload->size(), sim::Attribution::op(op_id),
                 [this, key = op.key, value = *op.payload, op_id, pending,
                  callback, requested, &clock] {
                     store_.primary_write(
                         client_node_, key, value, op_id,
                         [this, key, value, pending, callback, requested,
                          &clock](uint64_t version) {
                             if (pending->failed) return;
                             // write-through: the cache updates with the ack
                             cache_[key] =
                                 CacheEntry{value, version, clock.now()};
                             for (const auto& l : requested) {
                                 View v;
                                 v.level = l;
                                 v.arrival_ms = clock.now();
                                 if (++pending->views_seen >=
                                     pending->views_expected) {
                                     clock.cancel(pending->timer);
                                 }
                                 callback(v);
                             }
                         });
                 });
        return;
    }

    if (op.kind != Operation::Kind::Read &&
        op.kind != Operation::Kind::AppSpecific) {
        callback(ErrorInfo{ErrorKind::StorageError,
                           "the tiered binding supports only reads and writes"});
        return;
    }

    // Read path: resolve the cache synchronously so the expected view count
    // is known before anything is scheduled.
    std::optional<CacheEntry> cached;
    if (want_cache) cached = cache_entry(op.key);
    const bool cache_misses = want_cache && !cached.has_value();
    const bool cache_only = want_cache && !want_backup && !want_primary;

    auto seq = std::make_shared<GetSequencer>();
    for (const auto& l : levels) {
        if (l == kCache && cache_misses && !cache_only) continue;
        seq->order.push_back(l.rank);
    }
    seq->closing_rank = seq->order.back();

    auto pending = std::make_shared<PendingOp>();
    pending->views_expected = static_cast<int>(seq->order.size());
    pending->timer = clock.schedule_after(
        store_.config().op_timeout_ms, [pending, callback] {
            if (pending->views_seen >= pending->views_expected) return;
            pending->failed = true;
            callback(ErrorInfo{ErrorKind::Timeout,
                               "read timed out before all tiers answered"});
        });

    seq->emit = [pending, callback, &clock](View v) {
        if (pending->failed) return;
        if (++pending->views_seen >= pending->views_expected) {
            clock.cancel(pending->timer);
        }
        callback(std::move(v));
    };
    seq->on_close = [this, key = op.key, &clock](const View& v,
                                                 uint64_t version) {
        if (!v.value.empty()) {
            cache_[key] = CacheEntry{v.value, version, clock.now()};
        }
    };

    if (want_cache && !cache_misses) {
        clock.schedule_at(clock.now(), [seq, cached, &clock] {
            View v;
            v.value = cached->value;
            v.level = kCache;
            v.arrival_ms = clock.now();
            seq->feed(std::move(v), cached->version);
        });
    } else if (cache_only) {
        // Miss with nowhere else to go: a not-found view closes the read.
        clock.schedule_at(clock.now(), [seq, &clock] {
            View v;
            v.level = kCache;
            v.arrival_ms = clock.now();
            seq->feed(std::move(v), 0);
        });
    }

    auto launch_tier = [&](bool primary, const ConsistencyLevel& level) {
        const std::string& node =
            primary ? store_.primary_node() : store_.backup_node();
        net.send(client_node_, node, op.key.size(), sim::Attribution::op(op_id),
                 [this, primary, key = op.key, op_id, seq, level, &clock] {
                     store_.tier_read(primary, client_node_, key, op_id,
                                      [seq, level, &clock](std::string value,
                                                           uint64_t version) {
                                          View v;
                                          v.value = std::move(value);
                                          v.level = level;
                                          v.arrival_ms = clock.now();
                                          seq->feed(std::move(v), version);
                                      });
                 });
    };
    if (want_backup) launch_tier(false, kBackup);
    if (want_primary) launch_tier(true, kPrimary);
}

}  // namespace icg::tiered
