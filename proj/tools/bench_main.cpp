#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "icg/bench/experiments.hpp"

namespace {

using namespace icg;
using namespace icg::bench;

void write_output(const std::string& csv, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << csv;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + out_path);
    }
    out << csv;
}

int run_command(const std::string& workload, const std::string& dist,
                int objects, long ops, uint64_t seed,
                const std::string& binding, bool icg, int clients, int streams,
                int value_size, int r_strong, double lag_min, double lag_max,
                bool confirmations, const std::string& net_path,
                const std::string& out_path) {
    WorkloadSpec spec;
    spec.name = workload == "A"   ? WorkloadName::A
                : workload == "B" ? WorkloadName::B
                                  : WorkloadName::C;
    spec.dist =
        dist == "latest" ? Distribution::Latest : Distribution::Zipfian;
    spec.object_count = objects;
    spec.ops = ops;
    spec.seed = seed;
    spec.clients = clients;
    spec.streams_per_client = streams;
    spec.value_size = value_size;

    WanOptions wan;
    wan.net_config_path = net_path;
    wan.sim_seed = seed;

    const ReadMode mode = icg ? ReadMode::Icg : ReadMode::WeakOnly;
    Metrics m;
    if (binding == "quorum") {
        quorum::QuorumConfig qcfg;
        qcfg.r_strong = r_strong;
        qcfg.lag_min_ms = lag_min;
        qcfg.lag_max_ms = lag_max;
        qcfg.confirmations = confirmations;
        QuorumEnv env(qcfg, wan, spec.clients);
        m = env.run(spec, mode);
    } else if (binding == "queue") {
        queue::QueueConfig qcfg;
        QueueEnv env("IRL", "FRK", "IRL", spec.clients, qcfg, wan);
        m = env.run(spec, mode);
    } else {
        tiered::TieredConfig tcfg;
        TieredEnv env(tcfg, wan);
        spec.clients = 1;  // the cache is per client
        m = env.run(spec, mode);
    }

    std::string csv = metrics_csv_header() + "\n" +
                      metrics_csv_row(binding, spec, mode, m) + "\n";
    write_output(csv, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"replicated-object benchmarks with incremental views"};
    app.require_subcommand(1);

    // ---- run ----
    auto* run = app.add_subcommand(
        "run", "run one YCSB-style workload and print a metrics CSV row");
    std::string workload = "A";
    std::string dist = "zipfian";
    int objects = 1000;
    long ops = 10000;
    uint64_t seed = 1;
    std::string binding = "quorum";
    bool icg = false;
    int clients = 3;
    int streams = 4;
    int value_size = 100;
    int r_strong = 2;
    double lag_min = 5.0, lag_max = 50.0;
    bool confirmations = true;
    std::string net_path;
    std::string out_path;

    run->add_option("--workload", workload)
        ->check(CLI::IsMember({"A", "B", "C"}));
    run->add_option("--dist", dist)
        ->check(CLI::IsMember({"zipfian", "latest"}));
    run->add_option("--objects", objects)->check(CLI::PositiveNumber);
    run->add_option("--ops", ops)->check(CLI::PositiveNumber);
    run->add_option("--seed", seed);
    run->add_option("--binding", binding)
        ->check(CLI::IsMember({"quorum", "queue", "tiered"}));
    run->add_flag("--icg", icg, "read with all levels of the binding");
    run->add_option("--clients", clients)->check(CLI::Range(1, 3));
    run->add_option("--streams", streams)->check(CLI::PositiveNumber);
    run->add_option("--value-size", value_size)->check(CLI::PositiveNumber);
    run->add_option("--r-strong", r_strong)->check(CLI::Range(2, 3));
    run->add_option("--lag-min", lag_min);
    run->add_option("--lag-max", lag_max);
    run->add_flag("!--no-confirmations", confirmations,
                  "disable the confirmation optimization");
    run->add_option("--net", net_path, "latency matrix config file");
    run->add_option("--out", out_path, "write the CSV here instead of stdout");

    // ---- experiment ----
    auto* exp = app.add_subcommand(
        "experiment", "run one of the canned experiments and emit CSV");
    std::string which;
    uint64_t exp_seed = 1;
    int ticket_seeds = 100;
    std::string exp_net;
    std::string exp_out;
    exp->add_option("name", which)
        ->required()
        ->check(CLI::IsMember({"latency-gap", "divergence", "bandwidth",
                               "tickets", "ads", "timeline", "news"}));
    exp->add_option("--seed", exp_seed);
    exp->add_option("--ticket-seeds", ticket_seeds)->check(CLI::PositiveNumber);
    exp->add_option("--net", exp_net, "latency matrix config file");
    exp->add_option("--out", exp_out, "write the CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return run_command(workload, dist, objects, ops, seed, binding,
                               icg, clients, streams, value_size, r_strong,
                               lag_min, lag_max, confirmations, net_path,
                               out_path);
        }
        ExperimentOptions options;
        options.seed = exp_seed;
        options.wan.net_config_path = exp_net;
        options.wan.sim_seed = exp_seed;

        std::string csv;
        if (which == "latency-gap") {
            csv = experiment_latency_gap(options);
        } else if (which == "divergence") {
            csv = experiment_divergence(options);
        } else if (which == "bandwidth") {
            csv = experiment_bandwidth(options);
        } else if (which == "tickets") {
            csv = experiment_tickets(options, ticket_seeds);
        } else if (which == "ads") {
            csv = experiment_ads(options);
        } else if (which == "timeline") {
            csv = experiment_timeline(options);
        } else if (which == "news") {
            // The demo renders each arriving view before the CSV summary.
            std::ostringstream renders;
            csv = experiment_news(options, &renders);
            std::cout << renders.str();
        }
        write_output(csv, exp_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
