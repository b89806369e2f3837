#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "icg/bench/workload.hpp"
#include "icg/library.hpp"
#include "icg/queue/queue.hpp"
#include "icg/quorum/store.hpp"
#include "icg/sim/net.hpp"
#include "icg/tiered/tiered.hpp"

namespace icg::bench {

enum class ReadMode { WeakOnly, StrongOnly, Icg };

/// Network selection shared by every environment: the default three-region
/// WAN, or a plain-text config file.
struct WanOptions {
    std::string net_config_path;
    uint64_t sim_seed = 1;
};

void apply_net_options(sim::SimNet& net, const WanOptions& options);

/// Quorum world: replicas in FRK, IRL and VRG; up to three clients, each
/// contacting a coordinator in a remote region (IRL->FRK, FRK->VRG,
/// VRG->IRL), as in the WAN measurements.
class QuorumEnv {
public:
    QuorumEnv(const quorum::QuorumConfig& config, const WanOptions& wan,
              int clients = 3);

    struct Client {
        std::string node;
        int coordinator;
        std::shared_ptr<quorum::QuorumBinding> binding;
        std::unique_ptr<Library> lib;
    };

    sim::SimClock clock;
    sim::SimNet net;
    std::unique_ptr<quorum::QuorumCluster> cluster;
    std::vector<Client> clients;

    Library& lib(int i) { return *clients.at(i).lib; }

    /// Bytes on the client<->coordinator links, both directions, summed
    /// over clients.
    uint64_t client_link_bytes() const;

    Metrics run(const WorkloadSpec& spec, ReadMode mode);
};

/// Queue world: replicas in FRK, IRL and VRG with a configurable leader;
/// clients in one region contacting one replica.
class QueueEnv {
public:
    QueueEnv(const std::string& leader_region, const std::string& contact_region,
             const std::string& client_region, int clients,
             const queue::QueueConfig& config, const WanOptions& wan);

    struct Client {
        std::string node;
        std::shared_ptr<queue::QueueBinding> binding;
        std::unique_ptr<Library> lib;
    };

    sim::SimClock clock;
    sim::SimNet net;
    std::unique_ptr<queue::QueueCluster> cluster;
    std::vector<Client> clients;
    int contact = 0;

    Library& lib(int i) { return *clients.at(i).lib; }
    uint64_t client_link_bytes() const;

    Metrics run(const WorkloadSpec& spec, ReadMode mode);

    static int region_index(const std::string& region);  // FRK 0, IRL 1, VRG 2
};

/// Tiered world: primary in VRG, backup in FRK, one client in IRL with its
/// local cache.
class TieredEnv {
public:
    TieredEnv(const tiered::TieredConfig& config, const WanOptions& wan);

    sim::SimClock clock;
    sim::SimNet net;
    std::unique_ptr<tiered::TieredStore> store;
    std::shared_ptr<tiered::TieredBinding> binding;
    std::unique_ptr<Library> lib;
    std::string client_node;

    uint64_t client_link_bytes() const;

    Metrics run(const WorkloadSpec& spec, ReadMode mode);
};

/// Closed-loop key-value workload over one or more Library clients.
/// `preload` installs the dataset; reads follow `mode`; writes use the
/// weakest level unless `writes_strong`.
struct KvRunTarget {
    std::vector<Library*> libs;
    std::function<void(const std::string&, const std::string&)> preload;
    std::function<uint64_t()> client_link_bytes;
    bool writes_strong = false;
};

Metrics run_kv_workload(sim::SimClock& clock, const WorkloadSpec& spec,
                        const KvRunTarget& target, ReadMode mode);

/// Closed-loop queue workload: the read ratio maps reads to dequeues and
/// writes to enqueues of small fixed-size identifiers.
struct QueueRunTarget {
    std::vector<Library*> libs;
    std::function<void(const std::vector<std::string>&)> preload;
    std::function<uint64_t()> client_link_bytes;
};

Metrics run_queue_workload(sim::SimClock& clock, const WorkloadSpec& spec,
                           const QueueRunTarget& target, ReadMode mode);

/// One row per run; stable column set shared by `bench run`.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label, const WorkloadSpec& spec,
                            ReadMode mode, const Metrics& m);

}  // namespace icg::bench
