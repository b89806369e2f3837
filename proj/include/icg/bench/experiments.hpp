#pragma once

#include <string>
#include <vector>

#include "icg/bench/apps.hpp"
#include "icg/bench/runner.hpp"

namespace icg::bench {

struct ExperimentOptions {
    WanOptions wan;
    uint64_t seed = 1;
};

// --- single-request latency gaps (quorum configurations) -------------------

struct GapRow {
    std::string config;  // C1, C2, C3, CC2, CC3
    bool icg = false;
    double prelim_mean = -1.0;
    double prelim_p99 = -1.0;
    double final_mean = -1.0;
    double final_p99 = -1.0;
    double gap_mean = -1.0;
};

std::vector<GapRow> latency_gap_quorum(const ExperimentOptions& options,
                                       int probes = 50);

// --- queue latency per leader/contact placement -----------------------------

struct QueueGapRow {
    std::string leader_region;
    std::string contact_region;
    double expected_weak_rtt_ms = 0.0;
    double weak_mean = 0.0;
    double weak_p99 = 0.0;
    double strong_mean = 0.0;
    double strong_p99 = 0.0;
};

std::vector<QueueGapRow> latency_gap_queue(const ExperimentOptions& options,
                                           int probes = 50);

// --- divergence --------------------------------------------------------------

struct DivergenceRow {
    WorkloadName workload;
    Distribution dist;
    uint64_t seed = 0;
    long icg_reads = 0;
    long diverged = 0;
    double rate = 0.0;
    double lag_min_ms = 0.0;
    double lag_max_ms = 0.0;
};

/// Anti-entropy lag used by the divergence and bandwidth experiments. The
/// value is a calibration of this simulation, reported with the results.
quorum::QuorumConfig calibrated_quorum_config();

std::vector<DivergenceRow> divergence_rows(const ExperimentOptions& options,
                                           int seeds = 5,
                                           long target_icg_reads = 10000);

// --- bandwidth ---------------------------------------------------------------

struct BandwidthRow {
    std::string system;  // C1, CC2, *CC2, *CC2-forced-stale
    WorkloadName workload;
    double kb_per_op = 0.0;
    double overhead_vs_c1 = 0.0;
    double divergence = 0.0;
};

std::vector<BandwidthRow> bandwidth_rows(const ExperimentOptions& options,
                                         long ops = 6000);

struct DequeueCostRow {
    size_t queue_size = 0;
    double tail_read_bytes_per_op = 0.0;
    double naive_bytes_per_op = 0.0;
};

std::vector<DequeueCostRow> dequeue_cost_rows(const ExperimentOptions& options,
                                              int ops_per_size = 8);

// --- case studies ------------------------------------------------------------

RefDatasetSpec ads_dataset_spec(uint64_t seed);
RefDatasetSpec timeline_dataset_spec(uint64_t seed);

// --- CSV frontends (what the CLI prints) -------------------------------------

std::string experiment_latency_gap(const ExperimentOptions& options);
std::string experiment_divergence(const ExperimentOptions& options);
std::string experiment_bandwidth(const ExperimentOptions& options);
std::string experiment_tickets(const ExperimentOptions& options,
                               int seeds = 100);
std::string experiment_ads(const ExperimentOptions& options);
std::string experiment_timeline(const ExperimentOptions& options);
std::string experiment_news(const ExperimentOptions& options,
                            std::ostream* render_out = nullptr);

}  // namespace icg::bench
