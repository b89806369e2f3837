#include <doctest.h>

#include <stdexcept>

#include "icg/sim/net.hpp"

using namespace icg::sim;

namespace {

SimNet make_wan(SimClock& clock, uint64_t seed = 1) {
    SimNet net(clock, seed);
    SimNet::apply_default_wan(net);
    return net;
}

}  // namespace

TEST_CASE("advance fires nothing on an empty queue") {
    SimClock clock;
    CHECK(clock.advance_until(100.0) == 0);
    CHECK(clock.now() == 100.0);
}

TEST_CASE("events fire in timestamp order") {
    SimClock clock;
    std::vector<int> order;
    clock.schedule_at(20.0, [&] { order.push_back(2); });
    clock.schedule_at(10.0, [&] { order.push_back(1); });
    clock.advance_until(30.0);
    CHECK(order == std::vector<int>{1, 2});
}

TEST_CASE("ties at the same instant resolve by insertion order") {
    SimClock clock;
    std::vector<int> order;
    clock.schedule_at(5.0, [&] { order.push_back(1); });
    clock.schedule_at(5.0, [&] { order.push_back(2); });
    clock.schedule_at(5.0, [&] { order.push_back(3); });
    clock.advance_until(5.0);
    CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("canceled events never fire") {
    SimClock clock;
    int fired = 0;
    auto id = clock.schedule_at(5.0, [&] { ++fired; });
    clock.cancel(id);
    clock.advance_until(10.0);
    CHECK(fired == 0);
}

TEST_CASE("scheduling in the past throws") {
    SimClock clock;
    clock.advance_until(10.0);
    CHECK_THROWS_AS(clock.schedule_at(5.0, [] {}), std::invalid_argument);
}

TEST_CASE("clock time is monotone non-decreasing") {
    SimClock clock;
    clock.schedule_at(3.0, [] {});
    clock.advance_until(3.0);
    const double t = clock.now();
    clock.advance_until(3.0);
    CHECK(clock.now() == t);
}

TEST_CASE("send delivers after the configured one-way latency") {
    SimClock clock;
    SimNet net = make_wan(clock);
    net.add_node("a", "IRL");
    net.add_node("b", "FRK");
    double delivered_at = -1.0;
    net.send("a", "b", 0, Attribution::op(1),
             [&] { delivered_at = clock.now(); });
    clock.run_until_idle();
    CHECK(delivered_at == doctest::Approx(10.0));
}

TEST_CASE("send to self delivers immediately") {
    SimClock clock;
    SimNet net = make_wan(clock);
    net.add_node("a", "IRL");
    auto at = net.send("a", "a", 0, Attribution::op(1), [] {});
    CHECK(*at == doctest::Approx(0.0));
}

TEST_CASE("nodes in one region pay the intra-region delay") {
    SimClock clock;
    SimNet net = make_wan(clock);
    net.add_node("a", "IRL");
    net.add_node("b", "IRL");
    CHECK(net.latency_ms("a", "b") == doctest::Approx(1.0));
}

TEST_CASE("sends to unknown nodes are configuration errors") {
    SimClock clock;
    SimNet net = make_wan(clock);
    net.add_node("a", "IRL");
    CHECK_THROWS_AS(net.send("a", "ghost", 0, Attribution::op(1), [] {}),
                    std::invalid_argument);
}

TEST_CASE("same-pair deliveries never overtake each other") {
    SimClock clock;
    SimNet net(clock, 42);
    SimNet::apply_default_wan(net);
    net.set_jitter_ms(30.0);
    net.add_node("a", "IRL");
    net.add_node("b", "FRK");
    std::vector<int> order;
    for (int i = 0; i < 50; ++i) {
        net.send("a", "b", 0, Attribution::op(1),
                 [&order, i] { order.push_back(i); });
    }
    clock.run_until_idle();
    for (int i = 0; i < 50; ++i) CHECK(order[i] == i);
}

TEST_CASE("identical seeds produce identical delivery schedules") {
    auto run = [](uint64_t seed) {
        SimClock clock;
        SimNet net(clock, seed);
        SimNet::apply_default_wan(net);
        net.set_jitter_ms(7.5);
        net.add_node("a", "IRL");
        net.add_node("b", "VRG");
        std::vector<double> times;
        for (int i = 0; i < 20; ++i) {
            times.push_back(*net.send("a", "b", 10, Attribution::op(1), [] {}));
        }
        return times;
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}

TEST_CASE("meter splits operation and background traffic") {
    SimClock clock;
    SimNet net = make_wan(clock);
    net.add_node("a", "IRL");
    net.add_node("b", "FRK");
    net.send("a", "b", 100, Attribution::op(1), [] {});
    net.send("a", "b", 50, Attribution::op(2), [] {});
    net.send("b", "a", 20, Attribution::background(), [] {});

    const TrafficMeter& m = net.meter();
    CHECK(m.total_bytes() ==
          m.operation_bytes_sum() + m.background_bytes());
    CHECK(m.op_bytes(1) == 100 + SimNet::kHeaderBytes);
    CHECK(m.op_bytes(2) == 50 + SimNet::kHeaderBytes);
    CHECK(m.background_bytes() == 20 + SimNet::kHeaderBytes);
    CHECK(m.link_bytes("a", "b") == 150 + 2 * SimNet::kHeaderBytes);
    CHECK(m.pair_bytes("a", "b") == m.total_bytes());
}

TEST_CASE("config text drives regions, latencies, intra and jitter") {
    SimClock clock;
    SimNet net(clock, 1);
    net.load_config_text(
        "# test\n"
        "region X\nregion Y\n"
        "latency X Y 12.5\n"
        "intra 0.5\n"
        "jitter 3\n");
    net.add_node("n1", "X");
    net.add_node("n2", "Y");
    net.add_node("n3", "X");
    CHECK(net.latency_ms("n1", "n2") == doctest::Approx(12.5));
    CHECK(net.latency_ms("n2", "n1") == doctest::Approx(12.5));
    CHECK(net.latency_ms("n1", "n3") == doctest::Approx(0.5));
    CHECK(net.jitter_ms() == doctest::Approx(3.0));
}

TEST_CASE("malformed config lines are reported with their line number") {
    SimClock clock;
    SimNet net(clock, 1);
    CHECK_THROWS_WITH_AS(net.load_config_text("region X\nbogus 1\n"),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_AS(net.load_config_text("latency A B 10\n"),
                    std::invalid_argument);
}

TEST_CASE("unreachable nodes drop deliveries but still meter the send") {
    SimClock clock;
    SimNet net = make_wan(clock);
    net.add_node("a", "IRL");
    net.add_node("b", "FRK");
    net.set_unreachable("b", true);
    int delivered = 0;
    auto at = net.send("a", "b", 10, Attribution::op(1), [&] { ++delivered; });
    CHECK_FALSE(at.has_value());
    clock.run_until_idle();
    CHECK(delivered == 0);
    CHECK(net.meter().op_bytes(1) == 10 + SimNet::kHeaderBytes);

    net.set_unreachable("b", false);
    net.send("a", "b", 10, Attribution::op(2), [&] { ++delivered; });
    clock.run_until_idle();
    CHECK(delivered == 1);
}
