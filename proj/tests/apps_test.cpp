#include <doctest.h>

#include <set>

#include "icg/bench/apps.hpp"
#include "icg/bench/experiments.hpp"

using namespace icg;
using namespace icg::bench;

namespace {

RefDatasetSpec small_dataset() {
    RefDatasetSpec ds;
    ds.users = 20;
    ds.objects = 50;
    ds.min_refs = 1;
    ds.max_refs = 5;
    ds.object_size = 40;
    ds.seed = 9;
    return ds;
}

}  // namespace

TEST_CASE("ref lists round-trip through their encoding") {
    CHECK(decode_ref_list(encode_ref_list({1, 2, 40})) ==
          std::vector<int>{1, 2, 40});
    CHECK(decode_ref_list("").empty());
    CHECK(encode_ref_list({}).empty());
}

TEST_CASE("the dataset resolves every profile reference") {
    quorum::QuorumConfig qcfg;
    QuorumEnv env(qcfg, WanOptions{}, 1);
    const auto ds = small_dataset();
    const auto profiles = load_ref_dataset(*env.cluster, ds);
    REQUIRE(profiles.size() == static_cast<size_t>(ds.users));
    for (const auto& refs : profiles) {
        CHECK(!refs.empty());
        CHECK(refs.size() <= static_cast<size_t>(ds.max_refs));
        for (int r : refs) {
            CHECK(!env.cluster->replica_version(0, ds.object_key(r))
                       .absent());
        }
    }
}

TEST_CASE("a confirmed speculation hides the prefetch latency") {
    quorum::QuorumConfig qcfg;
    QuorumEnv env(qcfg, WanOptions{}, 1);
    const auto ds = small_dataset();
    load_ref_dataset(*env.cluster, ds);

    auto stats = std::make_shared<FetchStats>();
    auto c = speculative_fetch(env.lib(0), env.clock, ds, 3, stats);
    env.clock.run_until_idle();
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK_FALSE(stats->misspeculated);
    // refs at 20ms prelim / 40ms final; prefetch takes 40ms from the prelim
    CHECK(stats->prelim_ms - stats->start_ms == doctest::Approx(20.0));
    CHECK(stats->final_ms - stats->start_ms == doctest::Approx(40.0));
    CHECK(stats->done_ms - stats->start_ms == doctest::Approx(60.0));
    CHECK_FALSE(c.final_view()->value.empty());
}

TEST_CASE("the baseline pays the full two-step latency") {
    quorum::QuorumConfig qcfg;
    QuorumEnv env(qcfg, WanOptions{}, 1);
    const auto ds = small_dataset();
    load_ref_dataset(*env.cluster, ds);

    auto stats = std::make_shared<FetchStats>();
    auto c = baseline_fetch(env.lib(0), env.clock, ds, 3, stats);
    env.clock.run_until_idle();
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK(stats->done_ms - stats->start_ms == doctest::Approx(80.0));
}

TEST_CASE("speculative and baseline fetches assemble the same bytes") {
    const auto ds = small_dataset();
    std::string spec_value, base_value;
    {
        quorum::QuorumConfig qcfg;
        QuorumEnv env(qcfg, WanOptions{}, 1);
        load_ref_dataset(*env.cluster, ds);
        auto stats = std::make_shared<FetchStats>();
        auto c = speculative_fetch(env.lib(0), env.clock, ds, 7, stats);
        env.clock.run_until_idle();
        spec_value = c.final_view()->value;
    }
    {
        quorum::QuorumConfig qcfg;
        QuorumEnv env(qcfg, WanOptions{}, 1);
        load_ref_dataset(*env.cluster, ds);
        auto stats = std::make_shared<FetchStats>();
        auto c = baseline_fetch(env.lib(0), env.clock, ds, 7, stats);
        env.clock.run_until_idle();
        base_value = c.final_view()->value;
    }
    CHECK(spec_value == base_value);
}

TEST_CASE("a stale ref list aborts the speculation and refetches") {
    quorum::QuorumConfig qcfg;
    qcfg.lag_min_ms = 500.0;
    qcfg.lag_max_ms = 600.0;
    QuorumEnv env(qcfg, WanOptions{}, 2);
    const auto ds = small_dataset();
    load_ref_dataset(*env.cluster, ds);

    // rewrite user 3's profile through the other coordinator so the
    // fetching client's coordinator serves a stale preliminary
    env.lib(1).invoke_weak(
        Operation::write(ds.user_key(3), encode_ref_list({4, 5})));
    env.clock.advance_until(env.clock.now() + 100.0);  // acked, not pushed

    auto stats = std::make_shared<FetchStats>();
    auto c = speculative_fetch(env.lib(0), env.clock, ds, 3, stats);
    env.clock.run_until_idle();
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK(stats->misspeculated);
    // the result reflects the final (fresh) references
    CHECK(stats->done_ms > stats->final_ms);
    std::string expected;
    for (int r : {4, 5}) {
        expected += env.cluster->replica_version(1, ds.object_key(r)).value;
        expected += '\n';
    }
    CHECK(c.final_view()->value == expected);
}

TEST_CASE("an empty profile closes with an empty result") {
    quorum::QuorumConfig qcfg;
    QuorumEnv env(qcfg, WanOptions{}, 1);
    const auto ds = small_dataset();
    load_ref_dataset(*env.cluster, ds);
    env.cluster->preload(ds.user_key(2), "");

    auto stats = std::make_shared<FetchStats>();
    auto c = speculative_fetch(env.lib(0), env.clock, ds, 2, stats);
    env.clock.run_until_idle();
    REQUIRE(c.state() == CorrectableState::Final);
    CHECK(c.final_view()->value.empty());
}

TEST_CASE("missing references produce not-found entries, not failures") {
    quorum::QuorumConfig qcfg;
    QuorumEnv env(qcfg, WanOptions{}, 1);
    const auto ds = small_dataset();
    load_ref_dataset(*env.cluster, ds);
    env.cluster->preload(ds.user_key(4), encode_ref_list({49, 4999}));

    auto stats = std::make_shared<FetchStats>();
    auto c = speculative_fetch(env.lib(0), env.clock, ds, 4, stats);
    env.clock.run_until_idle();
    REQUIRE(c.state() == CorrectableState::Final);
    const std::string expected =
        env.cluster->replica_version(0, ds.object_key(49)).value + "\n" + "\n";
    CHECK(c.final_view()->value == expected);
}

TEST_CASE("the ticket shop sells the whole stock exactly once") {
    TicketShopConfig cfg;
    cfg.stock = 60;
    cfg.retailers = 3;
    cfg.threshold = 10;
    cfg.seed = 4;
    const TicketRunResult r = run_ticket_shop(cfg, WanOptions{});

    CHECK(r.confirmed == 60);
    CHECK(r.revoked == 0);
    CHECK(r.failed == 0);
    CHECK(r.sold_out_observed == 3);  // one per retailer
    std::set<int64_t> distinct(r.dequeued_positions.begin(),
                               r.dequeued_positions.end());
    CHECK(distinct.size() == r.dequeued_positions.size());
    CHECK(static_cast<int>(distinct.size()) == cfg.stock);
}

TEST_CASE("early tickets confirm at weak latency, late ones wait") {
    TicketShopConfig cfg;
    cfg.stock = 40;
    cfg.retailers = 2;
    cfg.threshold = 10;
    cfg.seed = 1;
    cfg.jitter_ms = 0.0;
    const TicketRunResult r = run_ticket_shop(cfg, WanOptions{});
    REQUIRE(r.confirmed == 40);

    long weak_path = 0, strong_path = 0;
    double weak_latency = 0, strong_latency = 0;
    for (const auto& p : r.purchases) {
        if (p.outcome != Purchase::Outcome::Confirmed) continue;
        if (p.confirmed_on_weak) {
            ++weak_path;
            weak_latency += p.latency_ms;
        } else {
            ++strong_path;
            strong_latency += p.latency_ms;
        }
    }
    REQUIRE(weak_path > 0);
    REQUIRE(strong_path > 0);
    CHECK(weak_latency / weak_path < strong_latency / strong_path);
    // the guard keeps the weak path away from the tail of the stock
    CHECK(weak_path <= cfg.stock - cfg.threshold);
}

TEST_CASE("news scenarios deliver the documented view patterns") {
    SUBCASE("warm updates once, then two no-ops") {
        const NewsResult r = news_read_demo(NewsScenario::WarmEqual, WanOptions{});
        CHECK(r.views_delivered == 3);
        CHECK(r.refreshes == 3);
        CHECK(r.content_changes == 1);
    }
    SUBCASE("cold cache refreshes per remaining tier") {
        const NewsResult r = news_read_demo(NewsScenario::ColdCache, WanOptions{});
        CHECK(r.views_delivered == 2);
        CHECK(r.content_changes == 1);
    }
    SUBCASE("a stale backup makes the last view differ") {
        const NewsResult r =
            news_read_demo(NewsScenario::StaleBackup, WanOptions{});
        CHECK(r.views_delivered == 3);
        CHECK(r.content_changes == 2);
        REQUIRE(r.displayed.size() == 2);
        CHECK(r.displayed.front() != r.displayed.back());
    }
}

TEST_CASE("case study runs count misspeculations deterministically") {
    WorkloadSpec spec;
    spec.name = WorkloadName::B;
    spec.ops = 300;
    spec.seed = 2;
    spec.clients = 3;
    spec.streams_per_client = 2;
    const auto ds = small_dataset();

    auto run_once = [&] {
        QuorumEnv env(calibrated_quorum_config(), WanOptions{}, spec.clients);
        return run_ref_case_study(env, ds, spec, true);
    };
    const CaseStudyResult a = run_once();
    const CaseStudyResult b = run_once();
    CHECK(a.fetches == b.fetches);
    CHECK(a.misspeculations == b.misspeculations);
    CHECK(a.metrics.final_.mean() == b.metrics.final_.mean());
    CHECK(a.metrics.errors == 0);
}
