#include "icg/bench/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace icg::bench {

const char* to_string(WorkloadName name) {
    switch (name) {
        case WorkloadName::A: return "A";
        case WorkloadName::B: return "B";
        case WorkloadName::C: return "C";
    }
    return "?";
}

const char* to_string(Distribution dist) {
    switch (dist) {
        case Distribution::Zipfian: return "zipfian";
        case Distribution::Latest: return "latest";
    }
    return "?";
}

double WorkloadSpec::read_ratio() const {
    switch (name) {
        case WorkloadName::A: return 0.50;
        case WorkloadName::B: return 0.95;
        case WorkloadName::C: return 1.00;
    }
    return 1.0;
}

ZipfianGenerator::ZipfianGenerator(int n, double theta) {
    if (n < 1) throw std::invalid_argument("zipfian needs n >= 1");
    cdf_.resize(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += 1.0 / std::pow(static_cast<double>(i + 1), theta);
        cdf_[i] = sum;
    }
    for (int i = 0; i < n; ++i) cdf_[i] /= sum;
    cdf_.back() = 1.0;
}

int ZipfianGenerator::draw(std::mt19937_64& rng) const {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<int>(it - cdf_.begin());
}

double ZipfianGenerator::probability(int rank) const {
    if (rank < 0 || rank >= size()) return 0.0;
    return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

LatestChooser::LatestChooser(int n, double theta) : zipf_(n, theta) {
    recency_.resize(n);
    pos_.resize(n);
    // Keys are preloaded in index order, so the highest index is newest.
    for (int i = 0; i < n; ++i) {
        recency_[i] = n - 1 - i;
        pos_[n - 1 - i] = i;
    }
}

int LatestChooser::draw(std::mt19937_64& rng) const {
    return recency_[zipf_.draw(rng)];
}

void LatestChooser::touch(int key) {
    const int rank = pos_.at(key);
    for (int r = rank; r > 0; --r) {
        recency_[r] = recency_[r - 1];
        pos_[recency_[r]] = r;
    }
    recency_[0] = key;
    pos_[key] = 0;
}

double LatencyStats::mean() const {
    if (samples_ms.empty()) return 0.0;
    double sum = 0.0;
    for (double v : samples_ms) sum += v;
    return sum / samples_ms.size();
}

double LatencyStats::percentile(double p) const {
    if (samples_ms.empty()) return 0.0;
    std::vector<double> sorted = samples_ms;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * n));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

std::string bench_key(int index, int key_size) {
    std::string key = "user" + std::to_string(index);
    if (static_cast<int>(key.size()) < key_size) {
        key.insert(4, std::string(key_size - key.size(), '0'));
    }
    return key;
}

std::string random_value(std::mt19937_64& rng, int size) {
    static const char alphabet[] =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::string out(size, '\0');
    for (int i = 0; i < size; ++i) {
        out[i] = alphabet[rng() % (sizeof(alphabet) - 1)];
    }
    return out;
}

std::string format_double(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

}  // namespace icg::bench
