#include "icg/sim/net.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace icg::sim {

void TrafficMeter::record(const std::string& from, const std::string& to,
                          uint64_t bytes, const Attribution& attr) {
    total_ += bytes;
    links_[{from, to}] += bytes;
    if (attr.op_id) {
        per_op_[*attr.op_id] += bytes;
        op_sum_ += bytes;
    } else {
        background_ += bytes;
    }
}

uint64_t TrafficMeter::link_bytes(const std::string& from,
                                  const std::string& to) const {
    auto it = links_.find({from, to});
    return it == links_.end() ? 0 : it->second;
}

uint64_t TrafficMeter::op_bytes(uint64_t op_id) const {
    auto it = per_op_.find(op_id);
    return it == per_op_.end() ? 0 : it->second;
}

uint64_t TrafficMeter::pair_bytes(const std::string& a,
                                  const std::string& b) const {
    return link_bytes(a, b) + link_bytes(b, a);
}

void TrafficMeter::reset() {
    total_ = background_ = op_sum_ = 0;
    links_.clear();
    per_op_.clear();
}

SimNet::SimNet(SimClock& clock, uint64_t seed) : clock_(clock), rng_(seed) {}

void SimNet::add_region(const std::string& region) { regions_.insert(region); }

void SimNet::set_region_latency(const std::string& a, const std::string& b,
                                double one_way_ms) {
    if (!regions_.count(a) || !regions_.count(b)) {
        throw std::invalid_argument("latency set for unknown region");
    }
    region_latency_[{a, b}] = one_way_ms;
    region_latency_[{b, a}] = one_way_ms;
}

void SimNet::add_node(const std::string& node, const std::string& region) {
    if (!regions_.count(region)) {
        throw std::invalid_argument("node placed in unknown region: " + region);
    }
    node_region_[node] = region;
}

bool SimNet::has_node(const std::string& node) const {
    return node_region_.count(node) > 0;
}

void SimNet::set_unreachable(const std::string& node, bool unreachable) {
    if (unreachable) {
        unreachable_.insert(node);
    } else {
        unreachable_.erase(node);
    }
}

double SimNet::latency_ms(const std::string& from, const std::string& to) const {
    auto fi = node_region_.find(from);
    auto ti = node_region_.find(to);
    if (fi == node_region_.end() || ti == node_region_.end()) {
        throw std::invalid_argument("send between unregistered nodes");
    }
    if (from == to) return 0.0;
    if (fi->second == ti->second) return intra_ms_;
    auto li = region_latency_.find({fi->second, ti->second});
    if (li == region_latency_.end()) {
        throw std::invalid_argument("no latency configured between regions " +
                                    fi->second + " and " + ti->second);
    }
    return li->second;
}

double SimNet::uniform() {
    // 53-bit mantissa draw, stable across platforms.
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::optional<double> SimNet::send(const std::string& from,
                                   const std::string& to,
                                   uint64_t payload_bytes,
                                   const Attribution& attr,
                                   std::function<void()> on_deliver) {
    const double base = latency_ms(from, to);
    meter_.record(from, to, kHeaderBytes + payload_bytes, attr);
    if (unreachable_.count(from) || unreachable_.count(to)) {
        return std::nullopt;
    }
    double delay = base;
    if (jitter_ms_ > 0.0) delay += uniform() * jitter_ms_;

    double at = clock_.now() + delay;
    auto& floor = fifo_floor_[{from, to}];
    if (at < floor) at = floor;  // same-pair messages never overtake
    floor = at;

    clock_.schedule_at(at, std::move(on_deliver));
    return at;
}

void SimNet::load_config_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        if (word == "region") {
            std::string name;
            if (!(ls >> name)) goto bad;
            add_region(name);
        } else if (word == "latency") {
            std::string a, b;
            double ms;
            if (!(ls >> a >> b >> ms)) goto bad;
            set_region_latency(a, b, ms);
        } else if (word == "intra") {
            double ms;
            if (!(ls >> ms)) goto bad;
            set_intra_region_ms(ms);
        } else if (word == "jitter") {
            double ms;
            if (!(ls >> ms)) goto bad;
            set_jitter_ms(ms);
        } else {
            goto bad;
        }
        continue;
    bad:
        throw std::runtime_error("bad net config at line " +
                                 std::to_string(lineno) + ": " + line);
    }
}

void SimNet::load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open net config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    load_config_text(buf.str());
}

void SimNet::apply_default_wan(SimNet& net) {
    net.add_region("FRK");
    net.add_region("IRL");
    net.add_region("VRG");
    net.set_region_latency("IRL", "FRK", 10.0);
    net.set_region_latency("IRL", "VRG", 41.5);
    net.set_region_latency("FRK", "VRG", 45.0);
    net.set_intra_region_ms(1.0);
    net.set_jitter_ms(0.0);
}

}  // namespace icg::sim
