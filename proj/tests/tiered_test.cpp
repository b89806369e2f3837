#include <doctest.h>

#include <random>

#include "icg/bench/runner.hpp"
#include "icg/tiered/tiered.hpp"

using namespace icg;
using namespace icg::tiered;
using icg::bench::TieredEnv;
using icg::bench::WanOptions;

namespace {

TieredEnv make_env(TieredConfig cfg = {}) {
    return TieredEnv(cfg, WanOptions{});
}

std::vector<std::string> run_read(TieredEnv& env, const std::string& key,
                                  std::optional<std::vector<ConsistencyLevel>>
                                      levels = std::nullopt) {
    std::vector<std::string> values;
    auto c = env.lib->invoke(Operation::read(key), std::move(levels));
    c.set_callbacks(CallbackSet{
        [&](const View& v) { values.push_back(v.value); },
        [&](const View& v) { values.push_back(v.value); }, nullptr});
    env.clock.run_until_idle();
    REQUIRE(c.state() == CorrectableState::Final);
    return values;
}

void warm(TieredEnv& env, const std::string& key) {
    env.lib->invoke_strong(Operation::read(key));
    env.clock.run_until_idle();
}

}  // namespace

TEST_CASE("the binding advertises cache, backup, primary in rank order") {
    auto env = make_env();
    const auto levels = env.lib->levels();
    REQUIRE(levels.size() == 3);
    CHECK(levels[0].name == "cache");
    CHECK(levels[1].name == "backup");
    CHECK(levels[2].name == "primary");
}

TEST_CASE("warm cache with equal tiers delivers three equal views") {
    auto env = make_env();
    env.store->preload("k", "v");
    warm(env, "k");
    const auto values = run_read(env, "k");
    CHECK(values == std::vector<std::string>{"v", "v", "v"});
}

TEST_CASE("a cold cache skips the cache view") {
    auto env = make_env();
    env.store->preload("k", "v");
    const auto values = run_read(env, "k");
    CHECK(values == std::vector<std::string>{"v", "v"});
}

TEST_CASE("a stale backup surfaces in the middle view") {
    TieredConfig cfg;
    cfg.backup_lag_ms = 500.0;
    auto env = make_env(cfg);
    env.store->preload("k", "old");
    warm(env, "k");
    env.store->inject_primary_write("k", "new");
    const auto values = run_read(env, "k");
    REQUIRE(values.size() == 3);
    CHECK(values[0] == "old");  // cache
    CHECK(values[1] == "old");  // backup, one write behind
    CHECK(values[2] == "new");  // primary
}

TEST_CASE("weak read on the tiered binding is served from the cache only") {
    auto env = make_env();
    env.store->preload("k", "v");
    warm(env, "k");
    const uint64_t before = env.client_link_bytes();
    const auto values =
        run_read(env, "k", {{env.lib->level_named("cache")}});
    CHECK(values == std::vector<std::string>{"v"});
    CHECK(env.client_link_bytes() == before);  // nothing on the wire
}

TEST_CASE("cache-only read of a missing key closes with not-found") {
    auto env = make_env();
    const auto values = run_read(env, "k", {{env.lib->level_named("cache")}});
    REQUIRE(values.size() == 1);
    CHECK(values[0].empty());
}

TEST_CASE("write-through: a put is visible at the cache level immediately") {
    auto env = make_env();
    auto put = env.lib->invoke_strong(Operation::write("k", "new"));
    env.clock.run_until_idle();
    REQUIRE(put.state() == CorrectableState::Final);
    const auto values = run_read(env, "k", {{env.lib->level_named("cache")}});
    CHECK(values == std::vector<std::string>{"new"});
}

TEST_CASE("a backup-level get before the lag elapses sees the old value") {
    TieredConfig cfg;
    cfg.backup_lag_ms = 500.0;
    auto env = make_env(cfg);
    env.store->preload("k", "old");
    env.lib->invoke_strong(Operation::write("k", "new"));
    env.clock.advance_until(env.clock.now() + 100.0);  // acked, lag pending
    const auto values = run_read(env, "k", {{env.lib->level_named("backup")}});
    CHECK(values == std::vector<std::string>{"old"});
    // after the lag the backup converges
    env.clock.advance_until(env.clock.now() + 600.0);
    const auto later = run_read(env, "k", {{env.lib->level_named("backup")}});
    CHECK(later == std::vector<std::string>{"new"});
}

TEST_CASE("a failed put leaves the cache coherent") {
    TieredConfig cfg;
    cfg.op_timeout_ms = 100.0;
    auto env = make_env(cfg);
    env.store->preload("k", "old");
    warm(env, "k");
    env.store->set_primary_reachable(false);
    auto put = env.lib->invoke_strong(Operation::write("k", "new"));
    env.clock.run_until_idle();
    REQUIRE(put.state() == CorrectableState::Error);
    CHECK(put.error()->kind == ErrorKind::Timeout);
    CHECK(env.binding->cache_entry("k")->value == "old");
    env.store->set_primary_reachable(true);
}

TEST_CASE("invoke_strong always returns the primary's current value") {
    auto env = make_env();
    std::mt19937_64 rng(11);
    for (int i = 0; i < 40; ++i) {
        const std::string key = "k" + std::to_string(rng() % 5);
        if (rng() % 2 == 0) {
            env.lib->invoke_strong(
                Operation::write(key, "v" + std::to_string(i)));
            env.clock.run_until_idle();
        }
        auto c = env.lib->invoke_strong(Operation::read(key));
        env.clock.run_until_idle();
        REQUIRE(c.state() == CorrectableState::Final);
        const auto direct = env.store->primary_value(key);
        CHECK(c.final_view()->value == (direct ? *direct : std::string()));
    }
}

TEST_CASE("the cache is never newer than the primary") {
    TieredConfig cfg;
    cfg.backup_lag_ms = 40.0;
    auto env = make_env(cfg);
    std::mt19937_64 rng(13);
    for (int i = 0; i < 60; ++i) {
        const std::string key = "k" + std::to_string(rng() % 4);
        switch (rng() % 3) {
            case 0:
                env.lib->invoke_strong(
                    Operation::write(key, "v" + std::to_string(i)));
                break;
            case 1:
                env.lib->invoke(Operation::read(key));
                break;
            default:
                env.store->inject_primary_write(key, "x" + std::to_string(i));
                break;
        }
        env.clock.run_until_idle();
        for (const auto& k : {"k0", "k1", "k2", "k3"}) {
            const auto entry = env.binding->cache_entry(k);
            if (entry) {
                CHECK(entry->version <= env.store->primary_version(k));
            }
        }
    }
}

TEST_CASE("view count equals requested levels minus a cache miss") {
    auto env = make_env();
    env.store->preload("k", "v");
    SUBCASE("cold: miss drops the cache view") {
        CHECK(run_read(env, "k").size() == 2);
    }
    SUBCASE("warm: all three") {
        warm(env, "k");
        CHECK(run_read(env, "k").size() == 3);
    }
    SUBCASE("backup+primary only") {
        const auto values = run_read(
            env, "k",
            {{env.lib->level_named("backup"), env.lib->level_named("primary")}});
        CHECK(values.size() == 2);
    }
}
