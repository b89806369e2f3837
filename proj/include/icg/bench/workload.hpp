#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace icg::bench {

enum class WorkloadName { A, B, C };
enum class Distribution { Zipfian, Latest };

const char* to_string(WorkloadName name);
const char* to_string(Distribution dist);

/// YCSB-style workload: A is a 50:50 read/write mix, B is 95:5, C is
/// read-only. Keys are drawn Zipfian over the object space or Zipfian over
/// recency rank (Latest).
struct WorkloadSpec {
    WorkloadName name = WorkloadName::A;
    Distribution dist = Distribution::Zipfian;
    int object_count = 1000;
    int value_size = 100;
    int key_size = 32;
    long ops = 10000;
    uint64_t seed = 1;
    int clients = 3;             // capped by the environment's client count
    int streams_per_client = 4;  // concurrent closed loops per client

    double read_ratio() const;
};

/// Exact Zipfian sampling over ranks [0, n) with exponent theta, by inverse
/// CDF over the precomputed mass function.
class ZipfianGenerator {
public:
    explicit ZipfianGenerator(int n, double theta = 0.99);

    int draw(std::mt19937_64& rng) const;
    int size() const { return static_cast<int>(cdf_.size()); }

    /// P(rank) = rank^-theta / H_{n,theta}.
    double probability(int rank) const;

private:
    std::vector<double> cdf_;
};

/// The Latest access pattern: a Zipfian draw over recency rank, where rank
/// 0 is the most recently inserted or updated key.
class LatestChooser {
public:
    explicit LatestChooser(int n, double theta = 0.99);

    /// Returns a key index; rank 0 maps to the newest key.
    int draw(std::mt19937_64& rng) const;

    /// Marks the key as freshly updated (moves it to rank 0).
    void touch(int key);

    int key_at_rank(int rank) const { return recency_.at(rank); }
    int rank_of(int key) const { return pos_.at(key); }

private:
    ZipfianGenerator zipf_;
    std::vector<int> recency_;  // index = rank, front = newest
    std::vector<int> pos_;      // key -> rank
};

struct LatencyStats {
    std::vector<double> samples_ms;

    void add(double ms) { samples_ms.push_back(ms); }
    size_t count() const { return samples_ms.size(); }
    double mean() const;
    /// Nearest-rank percentile, p in (0, 100].
    double percentile(double p) const;
};

struct Metrics {
    long ops_issued = 0;
    long reads = 0;
    long writes = 0;
    long errors = 0;
    long icg_reads = 0;
    long diverged = 0;
    long misspeculations = 0;

    LatencyStats preliminary;
    LatencyStats final_;
    LatencyStats write_;

    double makespan_ms = 0.0;
    double kb_per_op = 0.0;

    double divergence_rate() const {
        return icg_reads == 0 ? 0.0
                              : static_cast<double>(diverged) / icg_reads;
    }
    double throughput_ops_per_s() const {
        return makespan_ms <= 0.0 ? 0.0 : ops_issued / (makespan_ms / 1000.0);
    }
};

/// Fixed-width bench key: "user" + zero-padded index.
std::string bench_key(int index, int key_size);

/// Deterministic value bytes for one write.
std::string random_value(std::mt19937_64& rng, int size);

/// Fixed-point decimal formatting used by all CSV output.
std::string format_double(double v, int decimals = 6);

}  // namespace icg::bench
