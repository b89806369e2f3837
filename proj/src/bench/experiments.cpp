#include "icg/bench/experiments.hpp"

#include <cmath>
#include <sstream>

namespace icg::bench {

namespace {

// One synchronous probe: issue, pump, harvest latencies.
struct ProbeResult {
    double prelim = -1.0;
    double final_ = -1.0;
    bool ok = false;
};

ProbeResult probe_read(QuorumEnv& env, const std::string& key, ReadMode mode) {
    ProbeResult r;
    const double t0 = env.clock.now();
    Library& lib = env.lib(0);
    Correctable c = mode == ReadMode::Icg
                        ? lib.invoke(Operation::read(key))
                        : (mode == ReadMode::WeakOnly
                               ? lib.invoke_weak(Operation::read(key))
                               : lib.invoke_strong(Operation::read(key)));
    env.clock.run_until_idle();
    if (c.state() != CorrectableState::Final) return r;
    for (const auto& v : c.delivered_views()) r.prelim = v.arrival_ms - t0;
    r.final_ = c.final_view()->arrival_ms - t0;
    r.ok = true;
    return r;
}

}  // namespace

std::vector<GapRow> latency_gap_quorum(const ExperimentOptions& options,
                                       int probes) {
    struct Config {
        const char* name;
        int r_strong;
        ReadMode mode;
    };
    const Config configs[] = {
        {"C1", 2, ReadMode::WeakOnly},   {"C2", 2, ReadMode::StrongOnly},
        {"C3", 3, ReadMode::StrongOnly}, {"CC2", 2, ReadMode::Icg},
        {"CC3", 3, ReadMode::Icg},
    };

    std::vector<GapRow> rows;
    for (const auto& cfg : configs) {
        quorum::QuorumConfig qcfg;
        qcfg.r_strong = cfg.r_strong;
        QuorumEnv env(qcfg, options.wan, 1);

        std::mt19937_64 rng(options.seed);
        std::vector<std::string> keys;
        for (int i = 0; i < 100; ++i) {
            keys.push_back(bench_key(i, 32));
            env.cluster->preload(keys.back(), random_value(rng, 100));
        }

        LatencyStats prelim, final_, gap;
        for (int p = 0; p < probes; ++p) {
            const ProbeResult r =
                probe_read(env, keys[p % keys.size()], cfg.mode);
            if (!r.ok) continue;
            final_.add(r.final_);
            if (r.prelim >= 0) {
                prelim.add(r.prelim);
                gap.add(r.final_ - r.prelim);
            }
        }

        GapRow row;
        row.config = cfg.name;
        row.icg = cfg.mode == ReadMode::Icg;
        row.final_mean = final_.mean();
        row.final_p99 = final_.percentile(99);
        if (prelim.count() > 0) {
            row.prelim_mean = prelim.mean();
            row.prelim_p99 = prelim.percentile(99);
            row.gap_mean = gap.mean();
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<QueueGapRow> latency_gap_queue(const ExperimentOptions& options,
                                           int probes) {
    struct Placement {
        const char* leader;
        const char* contact;
        double weak_rtt;
    };
    // Client is always in IRL; weak latency tracks the client-contact RTT.
    const Placement placements[] = {
        {"IRL", "IRL", 2.0},
        {"FRK", "FRK", 20.0},
        {"VRG", "IRL", 2.0},
        {"VRG", "VRG", 83.0},
    };

    std::vector<QueueGapRow> rows;
    for (const auto& pl : placements) {
        queue::QueueConfig qcfg;
        QueueEnv env(pl.leader, pl.contact, "IRL", 1, qcfg, options.wan);

        LatencyStats weak, strong;
        for (int p = 0; p < probes; ++p) {
            char payload[16];
            std::snprintf(payload, sizeof(payload), "tkt%05d", p);
            const double t0 = env.clock.now();
            Correctable c = env.lib(0).invoke(Operation::enqueue(payload));
            env.clock.run_until_idle();
            if (c.state() != CorrectableState::Final) continue;
            for (const auto& v : c.delivered_views()) {
                weak.add(v.arrival_ms - t0);
            }
            strong.add(c.final_view()->arrival_ms - t0);
        }

        QueueGapRow row;
        row.leader_region = pl.leader;
        row.contact_region = pl.contact;
        row.expected_weak_rtt_ms = pl.weak_rtt;
        row.weak_mean = weak.mean();
        row.weak_p99 = weak.percentile(99);
        row.strong_mean = strong.mean();
        row.strong_p99 = strong.percentile(99);
        rows.push_back(row);
    }
    return rows;
}

quorum::QuorumConfig calibrated_quorum_config() {
    quorum::QuorumConfig qcfg;
    qcfg.r_strong = 2;
    qcfg.w = 1;
    // Calibrated so the Latest/1K-object workload A run lands in the
    // high-divergence regime; reported alongside every divergence figure.
    qcfg.lag_min_ms = 5.0;
    qcfg.lag_max_ms = 150.0;
    return qcfg;
}

std::vector<DivergenceRow> divergence_rows(const ExperimentOptions& options,
                                           int seeds, long target_icg_reads) {
    struct Combo {
        WorkloadName w;
        Distribution d;
    };
    const Combo combos[] = {
        {WorkloadName::A, Distribution::Latest},
        {WorkloadName::B, Distribution::Latest},
        {WorkloadName::A, Distribution::Zipfian},
        {WorkloadName::B, Distribution::Zipfian},
        {WorkloadName::C, Distribution::Zipfian},
    };

    std::vector<DivergenceRow> rows;
    for (const auto& combo : combos) {
        for (int s = 0; s < seeds; ++s) {
            WorkloadSpec spec;
            spec.name = combo.w;
            spec.dist = combo.d;
            spec.object_count = 1000;
            spec.value_size = 100;
            spec.seed = options.seed + s;
            spec.clients = 3;
            spec.streams_per_client = 4;
            spec.ops = static_cast<long>(
                std::ceil(target_icg_reads / spec.read_ratio()));

            quorum::QuorumConfig qcfg = calibrated_quorum_config();
            QuorumEnv env(qcfg, options.wan, spec.clients);
            const Metrics m = env.run(spec, ReadMode::Icg);

            DivergenceRow row;
            row.workload = combo.w;
            row.dist = combo.d;
            row.seed = spec.seed;
            row.icg_reads = m.icg_reads;
            row.diverged = m.diverged;
            row.rate = m.divergence_rate();
            row.lag_min_ms = qcfg.lag_min_ms;
            row.lag_max_ms = qcfg.lag_max_ms;
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<BandwidthRow> bandwidth_rows(const ExperimentOptions& options,
                                         long ops) {
    struct System {
        const char* name;
        ReadMode mode;
        bool confirmations;
        bool force_full;
    };
    const System systems[] = {
        {"C1", ReadMode::WeakOnly, true, false},
        {"CC2", ReadMode::Icg, false, false},
        {"*CC2", ReadMode::Icg, true, false},
        {"*CC2-forced-stale", ReadMode::Icg, true, true},
    };
    const WorkloadName workloads[] = {WorkloadName::A, WorkloadName::B,
                                      WorkloadName::C};

    std::vector<BandwidthRow> rows;
    for (const auto w : workloads) {
        double c1_kb = 0.0;
        for (const auto& sys : systems) {
            WorkloadSpec spec;
            spec.name = w;
            spec.dist = Distribution::Latest;
            spec.object_count = 1000;
            spec.value_size = 100;
            spec.seed = options.seed;
            spec.clients = 3;
            spec.streams_per_client = 4;
            spec.ops = ops;

            quorum::QuorumConfig qcfg = calibrated_quorum_config();
            qcfg.confirmations = sys.confirmations;
            qcfg.force_full_finals = sys.force_full;
            QuorumEnv env(qcfg, options.wan, spec.clients);
            const Metrics m = env.run(spec, sys.mode);

            BandwidthRow row;
            row.system = sys.name;
            row.workload = w;
            row.kb_per_op = m.kb_per_op;
            row.divergence = m.divergence_rate();
            if (std::string(sys.name) == "C1") {
                c1_kb = m.kb_per_op;
                row.overhead_vs_c1 = 0.0;
            } else {
                row.overhead_vs_c1 =
                    c1_kb > 0 ? (m.kb_per_op - c1_kb) / c1_kb : 0.0;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<DequeueCostRow> dequeue_cost_rows(const ExperimentOptions& options,
                                              int ops_per_size) {
    const size_t sizes[] = {10, 500, 1000};
    std::vector<DequeueCostRow> rows;
    for (size_t size : sizes) {
        std::vector<std::string> stock;
        for (size_t i = 0; i < size; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "tkt%05zu", i);
            stock.emplace_back(buf);
        }

        DequeueCostRow row;
        row.queue_size = size;

        {
            queue::QueueConfig qcfg;
            QueueEnv env("IRL", "FRK", "FRK", 1, qcfg, options.wan);
            env.cluster->preload(stock);
            for (int i = 0; i < ops_per_size; ++i) {
                env.lib(0).invoke(Operation::dequeue());
                env.clock.run_until_idle();
            }
            row.tail_read_bytes_per_op =
                static_cast<double>(env.client_link_bytes()) / ops_per_size;
        }
        {
            queue::QueueConfig qcfg;
            QueueEnv env("IRL", "FRK", "FRK", 1, qcfg, options.wan);
            env.cluster->preload(stock);
            for (int i = 0; i < ops_per_size; ++i) {
                env.cluster->naive_dequeue(env.clients[0].node, env.contact,
                                           env.net.new_op_id(),
                                           [](std::optional<queue::QueueItem>) {});
                env.clock.run_until_idle();
            }
            row.naive_bytes_per_op =
                static_cast<double>(env.client_link_bytes()) / ops_per_size;
        }
        rows.push_back(row);
    }
    return rows;
}

RefDatasetSpec ads_dataset_spec(uint64_t seed) {
    // The full-size dataset (100k profiles, 230k ads) scaled down 100x.
    RefDatasetSpec ds;
    ds.users = 1000;
    ds.objects = 2300;
    ds.min_refs = 1;
    ds.max_refs = 40;
    ds.object_size = 100;
    ds.seed = seed;
    ds.user_key_prefix = "profile:";
    ds.object_key_prefix = "ad:";
    return ds;
}

RefDatasetSpec timeline_dataset_spec(uint64_t seed) {
    // 22k timelines / 65k tweets scaled down 100x.
    RefDatasetSpec ds;
    ds.users = 220;
    ds.objects = 650;
    ds.min_refs = 1;
    ds.max_refs = 20;
    ds.object_size = 140;
    ds.seed = seed;
    ds.user_key_prefix = "timeline:";
    ds.object_key_prefix = "tweet:";
    return ds;
}

std::string experiment_latency_gap(const ExperimentOptions& options) {
    std::ostringstream out;
    out << "section,config,prelim_mean_ms,prelim_p99_ms,final_mean_ms,"
           "final_p99_ms,gap_mean_ms,leader,contact,expected_weak_rtt_ms\n";
    for (const auto& r : latency_gap_quorum(options)) {
        out << "quorum," << r.config << ','
            << (r.prelim_mean < 0 ? "" : format_double(r.prelim_mean)) << ','
            << (r.prelim_p99 < 0 ? "" : format_double(r.prelim_p99)) << ','
            << format_double(r.final_mean) << ','
            << format_double(r.final_p99) << ','
            << (r.gap_mean < 0 ? "" : format_double(r.gap_mean)) << ",,,\n";
    }
    for (const auto& r : latency_gap_queue(options)) {
        out << "queue,enqueue," << format_double(r.weak_mean) << ','
            << format_double(r.weak_p99) << ',' << format_double(r.strong_mean)
            << ',' << format_double(r.strong_p99) << ','
            << format_double(r.strong_mean - r.weak_mean) << ','
            << r.leader_region << ',' << r.contact_region << ','
            << format_double(r.expected_weak_rtt_ms) << "\n";
    }
    return out.str();
}

std::string experiment_divergence(const ExperimentOptions& options) {
    std::ostringstream out;
    out << "workload,dist,seed,icg_reads,diverged,divergence_rate,"
           "lag_min_ms,lag_max_ms\n";
    for (const auto& r : divergence_rows(options)) {
        out << to_string(r.workload) << ',' << to_string(r.dist) << ','
            << r.seed << ',' << r.icg_reads << ',' << r.diverged << ','
            << format_double(r.rate) << ',' << format_double(r.lag_min_ms)
            << ',' << format_double(r.lag_max_ms) << "\n";
    }
    return out.str();
}

std::string experiment_bandwidth(const ExperimentOptions& options) {
    std::ostringstream out;
    out << "section,system,workload,kb_per_op,overhead_vs_c1,divergence,"
           "queue_size,tail_read_bytes_per_op,naive_bytes_per_op\n";
    for (const auto& r : bandwidth_rows(options)) {
        out << "quorum," << r.system << ',' << to_string(r.workload) << ','
            << format_double(r.kb_per_op) << ','
            << format_double(r.overhead_vs_c1) << ','
            << format_double(r.divergence) << ",,,\n";
    }
    for (const auto& r : dequeue_cost_rows(options)) {
        out << "queue-dequeue,,,,,," << r.queue_size << ','
            << format_double(r.tail_read_bytes_per_op) << ','
            << format_double(r.naive_bytes_per_op) << "\n";
    }
    return out.str();
}

std::string experiment_tickets(const ExperimentOptions& options, int seeds) {
    std::ostringstream out;
    out << "section,seed,confirmed,revoked,sold_out_observed,failed,"
           "purchase_index,outcome,path,ticket_position,latency_ms\n";
    std::vector<TicketRunResult> results;
    for (int s = 0; s < seeds; ++s) {
        TicketShopConfig cfg;
        cfg.seed = options.seed + s;
        results.push_back(run_ticket_shop(cfg, options.wan));
        const auto& r = results.back();
        out << "summary," << cfg.seed << ',' << r.confirmed << ',' << r.revoked
            << ',' << r.sold_out_observed << ',' << r.failed << ",,,,,\n";
    }
    if (!results.empty()) {
        const auto& first = results.front();
        for (size_t i = 0; i < first.purchases.size(); ++i) {
            const auto& p = first.purchases[i];
            const char* outcome =
                p.outcome == Purchase::Outcome::Confirmed  ? "confirmed"
                : p.outcome == Purchase::Outcome::Revoked  ? "revoked"
                : p.outcome == Purchase::Outcome::SoldOut  ? "sold_out"
                                                           : "failed";
            out << "timeline," << options.seed << ",,,,," << i << ','
                << outcome << ','
                << (p.confirmed_on_weak ? "weak" : "strong") << ','
                << p.ticket_position << ',' << format_double(p.latency_ms)
                << "\n";
        }
    }
    return out.str();
}

namespace {

std::string case_study_csv(const std::string& app,
                           const ExperimentOptions& options,
                           const RefDatasetSpec& ds) {
    std::ostringstream out;
    out << "app,workload,system,fetches,writes,errors,fetch_mean_ms,"
           "fetch_p99_ms,prelim_mean_ms,misspeculations,throughput_ops_s\n";
    const WorkloadName workloads[] = {WorkloadName::A, WorkloadName::B,
                                      WorkloadName::C};
    for (const auto w : workloads) {
        for (const bool speculative : {false, true}) {
            WorkloadSpec spec;
            spec.name = w;
            spec.dist = Distribution::Zipfian;
            spec.object_count = ds.users;
            spec.seed = options.seed;
            spec.clients = 3;
            spec.streams_per_client = 2;
            spec.ops = 2000;

            QuorumEnv env(calibrated_quorum_config(), options.wan,
                          spec.clients);
            const CaseStudyResult r =
                run_ref_case_study(env, ds, spec, speculative);
            out << app << ',' << to_string(w) << ','
                << (speculative ? "icg-speculation" : "baseline") << ','
                << r.fetches << ',' << r.metrics.writes << ','
                << r.metrics.errors << ','
                << format_double(r.metrics.final_.mean()) << ','
                << format_double(r.metrics.final_.percentile(99)) << ','
                << format_double(r.metrics.preliminary.mean()) << ','
                << r.misspeculations << ','
                << format_double(r.metrics.throughput_ops_per_s()) << "\n";
        }
    }
    return out.str();
}

}  // namespace

std::string experiment_ads(const ExperimentOptions& options) {
    return case_study_csv("ads", options, ads_dataset_spec(options.seed));
}

std::string experiment_timeline(const ExperimentOptions& options) {
    return case_study_csv("timeline", options,
                          timeline_dataset_spec(options.seed));
}

std::string experiment_news(const ExperimentOptions& options,
                            std::ostream* render_out) {
    std::ostringstream out;
    out << "scenario,views_delivered,refreshes,content_changes,"
           "final_display\n";
    const NewsScenario scenarios[] = {NewsScenario::WarmEqual,
                                      NewsScenario::ColdCache,
                                      NewsScenario::StaleBackup};
    for (const auto s : scenarios) {
        if (render_out) {
            (*render_out) << "-- " << to_string(s) << " --\n";
        }
        const NewsResult r = news_read_demo(s, options.wan, render_out);
        out << to_string(s) << ',' << r.views_delivered << ',' << r.refreshes
            << ',' << r.content_changes << ','
            << (r.displayed.empty() ? "" : r.displayed.back()) << "\n";
    }
    return out.str();
}

}  // namespace icg::bench
