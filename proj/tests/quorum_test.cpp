#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include "icg/bench/runner.hpp"
#include "icg/quorum/store.hpp"
#include "register_oracle.hpp"

using namespace icg;
using namespace icg::quorum;
using icg::bench::QuorumEnv;
using icg::bench::WanOptions;

namespace {

// Pump everything and return the settled correctable state.
void settle(sim::SimClock& clock) { clock.run_until_idle(); }

QuorumEnv make_env(QuorumConfig cfg = {}, int clients = 3) {
    return QuorumEnv(cfg, WanOptions{}, clients);
}

}  // namespace

TEST_CASE("merge_lww picks the greatest (timestamp, writer) version") {
    const VersionedValue a{"a", 5.0, 0};
    const VersionedValue b{"b", 9.0, 0};
    const VersionedValue c{"c", 7.0, 2};
    const VersionedValue d{"d", 7.0, 0};
    CHECK(merge_lww({a}).value == "a");
    CHECK(merge_lww({a, b}).value == "b");
    CHECK(merge_lww({c, d}).value == "c");  // writer 2 beats writer 0 at a tie
    CHECK(merge_lww({d, c}).value == "c");
    CHECK_THROWS_AS(merge_lww({}), std::invalid_argument);
}

TEST_CASE("digest64 is deterministic with a fixed empty-input token") {
    CHECK(digest64("x") == digest64("x"));
    CHECK(digest64("") == 14695981039346656037ull);
    CHECK(digest64("abc") != digest64("abd"));
}

TEST_CASE("single-bit flips change the digest across random samples") {
    std::mt19937_64 rng(424242);
    int collisions = 0;
    for (int i = 0; i < 10000; ++i) {
        const int len = 1 + static_cast<int>(rng() % 64);
        std::string input(len, '\0');
        for (auto& ch : input) ch = static_cast<char>(rng() & 0xff);
        std::string flipped = input;
        const int bit = static_cast<int>(rng() % (len * 8));
        flipped[bit / 8] = static_cast<char>(flipped[bit / 8] ^ (1 << (bit % 8)));
        if (digest64(input) == digest64(flipped)) ++collisions;
    }
    CHECK(collisions == 0);
}

TEST_CASE("config invariants are enforced") {
    sim::SimClock clock;
    sim::SimNet net(clock, 1);
    sim::SimNet::apply_default_wan(net);
    net.add_node("r0", "FRK");
    QuorumConfig bad;
    bad.r_strong = 1;  // needs r_weak < r_strong
    CHECK_THROWS_AS(QuorumCluster(net, bad, {"r0"}, 1), std::invalid_argument);
    QuorumConfig bad_w;
    bad_w.w = 4;
    CHECK_THROWS_AS(QuorumCluster(net, bad_w, {"r0"}, 1), std::invalid_argument);
}

TEST_CASE("W=1 writes are acknowledged at the client-coordinator RTT") {
    auto env = make_env({}, 1);
    const double t0 = env.clock.now();
    auto c = env.lib(0).invoke_weak(Operation::write("k", "v"));
    settle(env.clock);
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK(c.final_view()->arrival_ms - t0 == doctest::Approx(20.0));
    // committed locally at the coordinator, not yet anywhere else
    CHECK(env.cluster->replica_version(0, "k").value == "v");
}

TEST_CASE("later timestamp wins at every replica once anti-entropy settles") {
    auto env = make_env({}, 1);
    env.lib(0).invoke_weak(Operation::write("k", "old"));
    settle(env.clock);
    env.lib(0).invoke_weak(Operation::write("k", "new"));
    settle(env.clock);
    for (int r = 0; r < 3; ++r) {
        CHECK(env.cluster->replica_version(r, "k").value == "new");
    }
}

TEST_CASE("equal timestamps break ties toward the higher writer replica") {
    // Both writes arrive at their coordinators at the same virtual instant
    // (both client links are 10ms one-way), so the higher coordinator
    // index must win everywhere.
    auto env = make_env({}, 2);
    env.lib(0).invoke_weak(Operation::write("k", "via-frk"));  // coordinator 0
    env.lib(1).invoke_weak(Operation::write("k", "via-irl"));  // coordinator 1
    settle(env.clock);
    for (int r = 0; r < 3; ++r) {
        const auto v = env.cluster->replica_version(r, "k");
        CHECK(v.value == "via-irl");
        CHECK(v.writer_replica == 1);
    }
}

TEST_CASE("consistent replicas confirm the final view") {
    auto env = make_env({}, 1);
    env.cluster->preload("k", "v");
    auto c = env.lib(0).invoke(Operation::read("k"));
    std::vector<std::string> log;
    c.set_callbacks(CallbackSet{
        [&](const View& v) { log.push_back("U:" + v.value); },
        [&](const View& v) { log.push_back("F:" + v.value); }, nullptr});
    settle(env.clock);
    CHECK(log == std::vector<std::string>{"U:v", "F:v"});
    CHECK(env.cluster->confirmations_sent() == 1);
    CHECK(env.cluster->full_finals_sent() == 0);
}

TEST_CASE("a stale coordinator yields a diverging full-payload final") {
    QuorumConfig cfg;
    cfg.lag_min_ms = 500.0;  // keep anti-entropy far away from the read
    cfg.lag_max_ms = 600.0;
    auto env = make_env(cfg, 2);
    env.cluster->preload("k", "old");

    // Client 1 writes through the IRL coordinator; the FRK coordinator
    // stays stale until anti-entropy. IRL is FRK's strong quorum peer.
    env.lib(1).invoke_weak(Operation::write("k", "new"));
    env.clock.advance_until(env.clock.now() + 100.0);  // acked, not pushed

    auto c = env.lib(0).invoke(Operation::read("k"));
    settle(env.clock);
    REQUIRE(c.state() == CorrectableState::Final);
    REQUIRE(c.delivered_views().size() == 1);
    CHECK(c.delivered_views()[0].value == "old");
    CHECK(c.final_view()->value == "new");
    CHECK(env.cluster->full_finals_sent() == 1);
}

TEST_CASE("strong-only reads put no preliminary on the wire") {
    auto env = make_env({}, 1);
    env.cluster->preload("k", std::string(100, 'x'));
    const auto& client = env.clients[0].node;
    const auto& coord = env.cluster->replica_node(0);
    const uint64_t before = env.net.meter().pair_bytes(client, coord);
    auto c = env.lib(0).invoke_strong(Operation::read("k"));
    settle(env.clock);
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK(c.delivered_views().empty());
    const uint64_t used = env.net.meter().pair_bytes(client, coord) - before;
    // request (48 + key) + one full final (48 + 100), nothing else
    CHECK(used == 48 + 1 + 148);
}

TEST_CASE("weak read of an absent key closes with the not-found marker") {
    auto env = make_env({}, 1);
    auto c = env.lib(0).invoke_weak(Operation::read("missing"));
    settle(env.clock);
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK(c.final_view()->value.empty());
}

TEST_CASE("an unreachable quorum times out after any preliminary") {
    QuorumConfig cfg;
    cfg.op_timeout_ms = 200.0;
    auto env = make_env(cfg, 1);
    env.cluster->preload("k", "v");
    env.net.set_unreachable(env.cluster->replica_node(1), true);
    env.net.set_unreachable(env.cluster->replica_node(2), true);

    auto c = env.lib(0).invoke(Operation::read("k"));
    settle(env.clock);
    REQUIRE(c.state() == CorrectableState::Error);
    CHECK(c.error()->kind == ErrorKind::Timeout);
    CHECK(c.delivered_views().size() == 1);  // the preliminary got through
}

TEST_CASE("divergence probe distinguishes quiescent from racing reads") {
    QuorumConfig cfg;
    cfg.lag_min_ms = 500.0;
    cfg.lag_max_ms = 600.0;
    auto env = make_env(cfg, 2);
    env.cluster->preload("k", "v0");

    SUBCASE("quiescent store never diverges") {
        for (int i = 0; i < 10; ++i) {
            CHECK_FALSE(divergence_probe(env.clock, env.lib(0), "k"));
        }
    }
    SUBCASE("a write whose anti-entropy is still pending diverges") {
        env.lib(1).invoke_weak(Operation::write("k", "v1"));
        env.clock.advance_until(env.clock.now() + 100.0);
        CHECK(divergence_probe(env.clock, env.lib(0), "k"));
    }
}

TEST_CASE("W=2 writes wait for the nearest peer acknowledgement") {
    QuorumConfig cfg;
    cfg.w = 2;
    auto env = make_env(cfg, 1);
    const double t0 = env.clock.now();
    auto c = env.lib(0).invoke_weak(Operation::write("k", "v"));
    settle(env.clock);
    REQUIRE(c.state() == CorrectableState::Final);
    // client->coord 10, coord->peer->coord 20, coord->client 10
    CHECK(c.final_view()->arrival_ms - t0 == doctest::Approx(40.0));
    CHECK(env.cluster->replica_version(1, "k").value == "v");
}

TEST_CASE("error-free submissions fire exactly one callback per level") {
    auto env = make_env({}, 2);
    for (int i = 0; i < 50; ++i) {
        env.cluster->preload("k" + std::to_string(i), "v");
    }
    std::mt19937_64 rng(31);
    std::vector<std::pair<Correctable, size_t>> issued;
    for (int i = 0; i < 200; ++i) {
        Library& lib = env.lib(static_cast<int>(rng() % 2));
        const std::string key = "k" + std::to_string(rng() % 50);
        std::vector<ConsistencyLevel> levels;
        switch (rng() % 3) {
            case 0: levels = {QuorumBinding::kWeak}; break;
            case 1: levels = {QuorumBinding::kStrong}; break;
            default:
                levels = {QuorumBinding::kWeak, QuorumBinding::kStrong};
                break;
        }
        const bool is_read = rng() % 4 != 0;
        Correctable c = is_read
                            ? lib.invoke(Operation::read(key), levels)
                            : lib.invoke(Operation::write(key, "w"), levels);
        issued.emplace_back(std::move(c), levels.size());
    }
    env.clock.run_until_idle();
    for (auto& [c, n_levels] : issued) {
        REQUIRE(c.state() == CorrectableState::Final);
        CHECK(c.delivered_views().size() + 1 == n_levels);
        CHECK(c.late_event_count() == 0);
    }
}

// ---------------------------------------------------------------------------
// Regular-register oracle: see register_oracle.hpp (shared with the
// acceptance suite).
// ---------------------------------------------------------------------------

TEST_CASE("strong reads after an acked write never return older data") {
    CHECK(icg::testing::count_register_violations() == 0);
}
