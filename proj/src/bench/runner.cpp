#include "icg/bench/runner.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace icg::bench {

void apply_net_options(sim::SimNet& net, const WanOptions& options) {
    if (options.net_config_path.empty()) {
        sim::SimNet::apply_default_wan(net);
    } else {
        net.load_config_file(options.net_config_path);
    }
}

QuorumEnv::QuorumEnv(const quorum::QuorumConfig& config, const WanOptions& wan,
                     int n_clients)
    : net(clock, wan.sim_seed) {
    apply_net_options(net, wan);
    const std::vector<std::string> regions{"FRK", "IRL", "VRG"};
    std::vector<std::string> replica_nodes;
    for (const auto& r : regions) {
        replica_nodes.push_back("quorum-" + r);
        net.add_node(replica_nodes.back(), r);
    }
    cluster = std::make_unique<quorum::QuorumCluster>(net, config,
                                                      replica_nodes, 7);

    // Each client contacts a remote coordinator, per the WAN setup. The
    // IRL client reads through FRK, whose strong quorum peer is the IRL
    // replica - the coordinator the other two clients write through.
    struct Placement {
        const char* region;
        int coordinator;
    };
    const Placement placements[] = {{"IRL", 0}, {"FRK", 1}, {"VRG", 1}};
    if (n_clients < 1 || n_clients > 3) {
        throw std::invalid_argument("quorum env supports 1..3 clients");
    }
    for (int i = 0; i < n_clients; ++i) {
        Client c;
        c.node = std::string("client-") + placements[i].region;
        c.coordinator = placements[i].coordinator;
        net.add_node(c.node, placements[i].region);
        c.binding = std::make_shared<quorum::QuorumBinding>(*cluster, c.node,
                                                            c.coordinator);
        c.lib = std::make_unique<Library>(c.binding);
        clients.push_back(std::move(c));
    }
}

uint64_t QuorumEnv::client_link_bytes() const {
    uint64_t sum = 0;
    for (const auto& c : clients) {
        sum += net.meter().pair_bytes(c.node,
                                      cluster->replica_node(c.coordinator));
    }
    return sum;
}

Metrics QuorumEnv::run(const WorkloadSpec& spec, ReadMode mode) {
    KvRunTarget target;
    for (auto& c : clients) target.libs.push_back(c.lib.get());
    target.preload = [this](const std::string& k, const std::string& v) {
        cluster->preload(k, v);
    };
    target.client_link_bytes = [this] { return client_link_bytes(); };
    return run_kv_workload(clock, spec, target, mode);
}

int QueueEnv::region_index(const std::string& region) {
    if (region == "FRK") return 0;
    if (region == "IRL") return 1;
    if (region == "VRG") return 2;
    throw std::invalid_argument("unknown region: " + region);
}

QueueEnv::QueueEnv(const std::string& leader_region,
                   const std::string& contact_region,
                   const std::string& client_region, int n_clients,
                   const queue::QueueConfig& config, const WanOptions& wan)
    : net(clock, wan.sim_seed) {
    apply_net_options(net, wan);
    const std::vector<std::string> regions{"FRK", "IRL", "VRG"};
    std::vector<std::string> replica_nodes;
    for (const auto& r : regions) {
        replica_nodes.push_back("queue-" + r);
        net.add_node(replica_nodes.back(), r);
    }
    queue::QueueConfig cfg = config;
    cfg.leader = region_index(leader_region);
    contact = region_index(contact_region);
    cluster = std::make_unique<queue::QueueCluster>(net, cfg, replica_nodes);

    for (int i = 0; i < n_clients; ++i) {
        Client c;
        c.node = "client-" + client_region + "-" + std::to_string(i);
        net.add_node(c.node, client_region);
        c.binding =
            std::make_shared<queue::QueueBinding>(*cluster, c.node, contact);
        c.lib = std::make_unique<Library>(c.binding);
        clients.push_back(std::move(c));
    }
}

uint64_t QueueEnv::client_link_bytes() const {
    uint64_t sum = 0;
    for (const auto& c : clients) {
        sum += net.meter().pair_bytes(c.node, cluster->replica_node(contact));
    }
    return sum;
}

Metrics QueueEnv::run(const WorkloadSpec& spec, ReadMode mode) {
    QueueRunTarget target;
    for (auto& c : clients) target.libs.push_back(c.lib.get());
    target.preload = [this](const std::vector<std::string>& items) {
        cluster->preload(items);
    };
    target.client_link_bytes = [this] { return client_link_bytes(); };
    return run_queue_workload(clock, spec, target, mode);
}

TieredEnv::TieredEnv(const tiered::TieredConfig& config, const WanOptions& wan)
    : net(clock, wan.sim_seed) {
    apply_net_options(net, wan);
    net.add_node("primary-VRG", "VRG");
    net.add_node("backup-FRK", "FRK");
    client_node = "client-IRL";
    net.add_node(client_node, "IRL");
    store = std::make_unique<tiered::TieredStore>(net, config, "primary-VRG",
                                                  "backup-FRK");
    binding = std::make_shared<tiered::TieredBinding>(*store, client_node);
    lib = std::make_unique<Library>(binding);
}

uint64_t TieredEnv::client_link_bytes() const {
    return net.meter().pair_bytes(client_node, store->primary_node()) +
           net.meter().pair_bytes(client_node, store->backup_node());
}

Metrics TieredEnv::run(const WorkloadSpec& spec, ReadMode mode) {
    KvRunTarget target;
    target.libs.push_back(lib.get());
    target.preload = [this](const std::string& k, const std::string& v) {
        store->preload(k, v);
    };
    target.client_link_bytes = [this] { return client_link_bytes(); };
    target.writes_strong = true;  // write-through goes to the primary
    return run_kv_workload(clock, spec, target, mode);
}

namespace {

// Shared closed-loop machinery: streams issue the next operation from the
// completion handler of the previous one.
struct RunState {
    const WorkloadSpec& spec;
    sim::SimClock& clock;
    Metrics metrics;
    long target_ops;
    long issued = 0;
    long completed = 0;
    double last_completion_ms = 0.0;

    ZipfianGenerator zipf;
    std::unique_ptr<LatestChooser> latest;
    std::vector<std::mt19937_64> stream_rngs;

    explicit RunState(const WorkloadSpec& s, sim::SimClock& c, int streams)
        : spec(s), clock(c), target_ops(s.ops), zipf(s.object_count) {
        if (s.dist == Distribution::Latest) {
            latest = std::make_unique<LatestChooser>(s.object_count);
        }
        for (int i = 0; i < streams; ++i) {
            stream_rngs.emplace_back(s.seed * 1000003ull + i);
        }
    }

    int draw_key(std::mt19937_64& rng) {
        return latest ? latest->draw(rng) : zipf.draw(rng);
    }

    void finish_op(double now) {
        ++completed;
        last_completion_ms = std::max(last_completion_ms, now);
    }
};

struct OpObs {
    double t0 = 0.0;
    bool have_prelim = false;
    std::string prelim_value;
};

}  // namespace

Metrics run_kv_workload(sim::SimClock& clock, const WorkloadSpec& spec,
                        const KvRunTarget& target, ReadMode mode) {
    const int n_clients =
        std::min<int>(spec.clients, static_cast<int>(target.libs.size()));
    const int streams = n_clients * spec.streams_per_client;

    // Dataset: every key present on every replica before the clock starts.
    std::mt19937_64 dataset_rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    for (int i = 0; i < spec.object_count; ++i) {
        target.preload(bench_key(i, spec.key_size),
                       random_value(dataset_rng, spec.value_size));
    }

    auto state = std::make_shared<RunState>(spec, clock, streams);

    // Closed loop: completion handlers re-enter `issue`. Every handler
    // fires inside run_until_idle below, within this frame.
    std::function<void(int)> issue = [&issue, state, &target, mode, n_clients,
                                      &spec](int stream) {
        if (state->issued >= state->target_ops) return;
        state->issued += 1;
        auto& rng = state->stream_rngs[stream];
        Library& lib = *target.libs[stream % n_clients];

        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const bool is_read = u < spec.read_ratio();
        const int key_idx = state->draw_key(rng);
        const std::string key = bench_key(key_idx, spec.key_size);

        auto obs = std::make_shared<OpObs>();
        obs->t0 = state->clock.now();
        const bool icg = is_read && mode == ReadMode::Icg;

        CallbackSet cbs;
        cbs.on_update = [state, obs](const View& v) {
            state->metrics.preliminary.add(v.arrival_ms - obs->t0);
            obs->have_prelim = true;
            obs->prelim_value = v.value;
        };
        if (is_read) {
            cbs.on_final = [state, obs, icg, &issue, stream](const View& v) {
                state->metrics.final_.add(v.arrival_ms - obs->t0);
                if (icg) {
                    state->metrics.icg_reads += 1;
                    if (obs->have_prelim && obs->prelim_value != v.value) {
                        state->metrics.diverged += 1;
                    }
                }
                state->finish_op(v.arrival_ms);
                issue(stream);
            };
        } else {
            cbs.on_final = [state, obs, &issue, stream](const View& v) {
                state->metrics.write_.add(v.arrival_ms - obs->t0);
                state->finish_op(v.arrival_ms);
                issue(stream);
            };
        }
        cbs.on_error = [state, &issue, stream](const ErrorInfo&) {
            state->metrics.errors += 1;
            state->finish_op(state->clock.now());
            issue(stream);
        };

        if (is_read) {
            state->metrics.reads += 1;
            Correctable c = mode == ReadMode::Icg
                                ? lib.invoke(Operation::read(key))
                                : (mode == ReadMode::WeakOnly
                                       ? lib.invoke_weak(Operation::read(key))
                                       : lib.invoke_strong(Operation::read(key)));
            c.set_callbacks(std::move(cbs));
        } else {
            state->metrics.writes += 1;
            if (state->latest) state->latest->touch(key_idx);
            Operation op = Operation::write(
                key, random_value(rng, spec.value_size));
            Correctable c = target.writes_strong ? lib.invoke_strong(op)
                                                 : lib.invoke_weak(op);
            c.set_callbacks(std::move(cbs));
        }
    };

    const uint64_t bytes_before =
        target.client_link_bytes ? target.client_link_bytes() : 0;
    for (int s = 0; s < streams; ++s) issue(s);
    clock.run_until_idle();

    Metrics m = std::move(state->metrics);
    m.ops_issued = state->issued;
    m.makespan_ms = state->last_completion_ms;
    if (target.client_link_bytes && m.ops_issued > 0) {
        const uint64_t used = target.client_link_bytes() - bytes_before;
        m.kb_per_op = static_cast<double>(used) / m.ops_issued / 1024.0;
    }
    return m;
}

Metrics run_queue_workload(sim::SimClock& clock, const WorkloadSpec& spec,
                           const QueueRunTarget& target, ReadMode mode) {
    const int n_clients =
        std::min<int>(spec.clients, static_cast<int>(target.libs.size()));
    const int streams = n_clients * spec.streams_per_client;

    // The queue starts with object_count small elements.
    std::vector<std::string> initial;
    initial.reserve(spec.object_count);
    for (int i = 0; i < spec.object_count; ++i) {
        initial.push_back("t" + std::to_string(i % 100000));
    }
    target.preload(initial);

    auto state = std::make_shared<RunState>(spec, clock, streams);
    uint64_t next_item = spec.object_count;

    std::function<void(int)> issue = [&issue, state, &target, mode, n_clients,
                                      &spec, &next_item](int stream) {
        if (state->issued >= state->target_ops) return;
        state->issued += 1;
        auto& rng = state->stream_rngs[stream];
        Library& lib = *target.libs[stream % n_clients];

        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const bool is_dequeue = u < spec.read_ratio();

        auto obs = std::make_shared<OpObs>();
        obs->t0 = state->clock.now();
        const bool icg = mode == ReadMode::Icg;

        CallbackSet cbs;
        cbs.on_update = [state, obs](const View& v) {
            state->metrics.preliminary.add(v.arrival_ms - obs->t0);
            obs->have_prelim = true;
            obs->prelim_value = v.value;
        };
        cbs.on_final = [state, obs, icg, is_dequeue, &issue,
                        stream](const View& v) {
            if (is_dequeue) {
                state->metrics.final_.add(v.arrival_ms - obs->t0);
                if (icg) {
                    state->metrics.icg_reads += 1;
                    if (obs->have_prelim && obs->prelim_value != v.value) {
                        state->metrics.diverged += 1;
                    }
                }
            } else {
                state->metrics.write_.add(v.arrival_ms - obs->t0);
            }
            state->finish_op(v.arrival_ms);
            issue(stream);
        };
        cbs.on_error = [state, &issue, stream](const ErrorInfo&) {
            state->metrics.errors += 1;
            state->finish_op(state->clock.now());
            issue(stream);
        };

        if (is_dequeue) {
            state->metrics.reads += 1;
            Correctable c =
                icg ? lib.invoke(Operation::dequeue())
                    : (mode == ReadMode::WeakOnly
                           ? lib.invoke_weak(Operation::dequeue())
                           : lib.invoke_strong(Operation::dequeue()));
            c.set_callbacks(std::move(cbs));
        } else {
            state->metrics.writes += 1;
            Operation op = Operation::enqueue("t" + std::to_string(next_item++ %
                                                                   100000));
            lib.invoke_weak(op).set_callbacks(std::move(cbs));
        }
    };

    const uint64_t bytes_before =
        target.client_link_bytes ? target.client_link_bytes() : 0;
    for (int s = 0; s < streams; ++s) issue(s);
    clock.run_until_idle();

    Metrics m = std::move(state->metrics);
    m.ops_issued = state->issued;
    m.makespan_ms = state->last_completion_ms;
    if (target.client_link_bytes && m.ops_issued > 0) {
        const uint64_t used = target.client_link_bytes() - bytes_before;
        m.kb_per_op = static_cast<double>(used) / m.ops_issued / 1024.0;
    }
    return m;
}

std::string metrics_csv_header() {
    return "label,workload,dist,mode,clients,streams,objects,value_size,ops,"
           "reads,writes,errors,icg_reads,diverged,divergence_rate,"
           "prelim_mean_ms,prelim_p99_ms,final_mean_ms,final_p99_ms,"
           "write_mean_ms,write_p99_ms,throughput_ops_s,kb_per_op,"
           "misspeculations";
}

static const char* mode_name(ReadMode mode) {
    switch (mode) {
        case ReadMode::WeakOnly: return "weak";
        case ReadMode::StrongOnly: return "strong";
        case ReadMode::Icg: return "icg";
    }
    return "?";
}

std::string metrics_csv_row(const std::string& label, const WorkloadSpec& spec,
                            ReadMode mode, const Metrics& m) {
    std::ostringstream out;
    out << label << ',' << to_string(spec.name) << ',' << to_string(spec.dist)
        << ',' << mode_name(mode) << ',' << spec.clients << ','
        << spec.streams_per_client << ',' << spec.object_count << ','
        << spec.value_size << ',' << m.ops_issued << ',' << m.reads << ','
        << m.writes << ',' << m.errors << ',' << m.icg_reads << ','
        << m.diverged << ',' << format_double(m.divergence_rate()) << ','
        << format_double(m.preliminary.mean()) << ','
        << format_double(m.preliminary.percentile(99)) << ','
        << format_double(m.final_.mean()) << ','
        << format_double(m.final_.percentile(99)) << ','
        << format_double(m.write_.mean()) << ','
        << format_double(m.write_.percentile(99)) << ','
        << format_double(m.throughput_ops_per_s()) << ','
        << format_double(m.kb_per_op) << ',' << m.misspeculations;
    return out.str();
}

}  // namespace icg::bench
