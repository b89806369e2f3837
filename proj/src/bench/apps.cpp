#include "icg/bench/apps.hpp"

#include <algorithm>
#include <sstream>

namespace icg::bench {

std::string encode_ref_list(const std::vector<int>& refs) {
    std::ostringstream out;
    for (size_t i = 0; i < refs.size(); ++i) {
        if (i) out << ',';
        out << refs[i];
    }
    return out.str();
}

std::vector<int> decode_ref_list(const std::string& bytes) {
    std::vector<int> refs;
    if (bytes.empty()) return refs;
    std::istringstream in(bytes);
    std::string token;
    while (std::getline(in, token, ',')) {
        refs.push_back(std::stoi(token));
    }
    return refs;
}

std::vector<std::vector<int>> load_ref_dataset(quorum::QuorumCluster& cluster,
                                               const RefDatasetSpec& spec) {
    std::mt19937_64 rng(spec.seed ^ 0xada5ad5e11ull);
    for (int o = 0; o < spec.objects; ++o) {
        cluster.preload(spec.object_key(o),
                        random_value(rng, spec.object_size));
    }
    std::vector<std::vector<int>> profiles(spec.users);
    const int span = spec.max_refs - spec.min_refs + 1;
    for (int u = 0; u < spec.users; ++u) {
        const int count = spec.min_refs + static_cast<int>(rng() % span);
        auto& refs = profiles[u];
        refs.reserve(count);
        for (int i = 0; i < count; ++i) {
            refs.push_back(static_cast<int>(rng() % spec.objects));
        }
        cluster.preload(spec.user_key(u), encode_ref_list(refs));
    }
    return profiles;
}

namespace {

struct FetchRun {
    std::string prelim_raw;
    bool have_prelim = false;
    bool final_arrived = false;
    bool closed = false;

    uint64_t generation = 0;
    size_t outstanding = 0;
    bool prefetch_done = false;
    std::vector<std::string> fetched;
};

void fetch_objects(Library& lib, const RefDatasetSpec& ds,
                   const std::vector<int>& refs,
                   const std::shared_ptr<FetchRun>& run, uint64_t generation,
                   const std::function<void()>& on_all_fetched) {
    run->fetched.assign(refs.size(), std::string());
    run->outstanding = refs.size();
    run->prefetch_done = refs.empty();
    if (run->prefetch_done) {
        on_all_fetched();
        return;
    }
    for (size_t i = 0; i < refs.size(); ++i) {
        CallbackSet cbs;
        cbs.on_final = [run, generation, i, on_all_fetched](const View& v) {
            if (run->generation != generation || run->closed) return;
            run->fetched[i] = v.value;  // empty = not-found entry
            if (--run->outstanding == 0) {
                run->prefetch_done = true;
                on_all_fetched();
            }
        };
        cbs.on_error = [run, generation, i, on_all_fetched](const ErrorInfo&) {
            if (run->generation != generation || run->closed) return;
            if (--run->outstanding == 0) {
                run->prefetch_done = true;
                on_all_fetched();
            }
        };
        lib.invoke_strong(Operation::read(ds.object_key(refs[i])))
            .set_callbacks(std::move(cbs));
    }
}

std::string assemble(const std::vector<std::string>& fetched) {
    std::string out;
    for (const auto& f : fetched) {
        out += f;
        out += '\n';
    }
    return out;
}

}  // namespace

Correctable speculative_fetch(Library& lib, sim::SimClock& clock,
                              const RefDatasetSpec& spec, int user,
                              std::shared_ptr<FetchStats> stats) {
    auto [result, completer] = make_correctable({ConsistencyLevel{0, "result"}});
    stats->start_ms = clock.now();
    auto run = std::make_shared<FetchRun>();

    auto try_close = [run, completer, stats, &clock] {
        if (run->closed || !run->final_arrived || !run->prefetch_done) return;
        run->closed = true;
        stats->done_ms = clock.now();
        View v;
        v.value = assemble(run->fetched);
        v.level = ConsistencyLevel{0, "result"};
        v.arrival_ms = clock.now();
        completer.close_final(std::move(v));
    };

    CallbackSet cbs;
    cbs.on_update = [run, stats, &lib, &clock, spec, try_close](const View& v) {
        stats->prelim_ms = clock.now();
        run->have_prelim = true;
        run->prelim_raw = v.value;
        run->generation += 1;
        fetch_objects(lib, spec, decode_ref_list(v.value), run,
                      run->generation, try_close);
    };
    cbs.on_final = [run, stats, &lib, &clock, spec, try_close](const View& v) {
        stats->final_ms = clock.now();
        run->final_arrived = true;
        if (run->have_prelim && v.value == run->prelim_raw) {
            try_close();  // speculation confirmed; prefetch may still be due
            return;
        }
        if (run->have_prelim) {
            stats->misspeculated = true;  // stale prefetch is discarded
        }
        run->generation += 1;
        fetch_objects(lib, spec, decode_ref_list(v.value), run,
                      run->generation, try_close);
    };
    cbs.on_error = [run, stats, completer](const ErrorInfo& e) {
        if (run->closed) return;
        run->closed = true;
        stats->failed = true;
        completer.close_error(e);
    };

    lib.invoke(Operation::read(spec.user_key(user)))
        .set_callbacks(std::move(cbs));
    return result;
}

Correctable baseline_fetch(Library& lib, sim::SimClock& clock,
                           const RefDatasetSpec& spec, int user,
                           std::shared_ptr<FetchStats> stats) {
    auto [result, completer] = make_correctable({ConsistencyLevel{0, "result"}});
    stats->start_ms = clock.now();
    auto run = std::make_shared<FetchRun>();

    auto try_close = [run, completer, stats, &clock] {
        if (run->closed || !run->final_arrived || !run->prefetch_done) return;
        run->closed = true;
        stats->done_ms = clock.now();
        View v;
        v.value = assemble(run->fetched);
        v.level = ConsistencyLevel{0, "result"};
        v.arrival_ms = clock.now();
        completer.close_final(std::move(v));
    };

    CallbackSet cbs;
    cbs.on_final = [run, stats, &lib, &clock, spec, try_close](const View& v) {
        stats->final_ms = clock.now();
        run->final_arrived = true;
        run->generation += 1;
        fetch_objects(lib, spec, decode_ref_list(v.value), run,
                      run->generation, try_close);
    };
    cbs.on_error = [run, stats, completer](const ErrorInfo& e) {
        if (run->closed) return;
        run->closed = true;
        stats->failed = true;
        completer.close_error(e);
    };

    lib.invoke_strong(Operation::read(spec.user_key(user)))
        .set_callbacks(std::move(cbs));
    return result;
}

CaseStudyResult run_ref_case_study(QuorumEnv& env, const RefDatasetSpec& ds,
                                   const WorkloadSpec& spec, bool speculative) {
    load_ref_dataset(*env.cluster, ds);

    const int n_clients =
        std::min<int>(spec.clients, static_cast<int>(env.clients.size()));
    const int streams = n_clients * spec.streams_per_client;

    struct Shared {
        CaseStudyResult result;
        long issued = 0;
        double last_done = 0.0;
        ZipfianGenerator user_zipf;
        std::unique_ptr<LatestChooser> latest;
        std::vector<std::mt19937_64> rngs;
        explicit Shared(const WorkloadSpec& s, int users, int streams)
            : user_zipf(users) {
            if (s.dist == Distribution::Latest) {
                latest = std::make_unique<LatestChooser>(users);
            }
            for (int i = 0; i < streams; ++i) {
                rngs.emplace_back(s.seed * 1000003ull + i);
            }
        }
    };
    auto shared = std::make_shared<Shared>(spec, ds.users, streams);

    std::function<void(int)> issue = [&issue, shared, &env, &ds, &spec,
                                      speculative, n_clients](int s) {
        if (shared->issued >= spec.ops) return;
        shared->issued += 1;
        auto& rng = shared->rngs[s];
        Library& lib = env.lib(s % n_clients);
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const int user = shared->latest ? shared->latest->draw(rng)
                                        : shared->user_zipf.draw(rng);

        if (u < spec.read_ratio()) {
            shared->result.fetches += 1;
            auto stats = std::make_shared<FetchStats>();
            Correctable fetch =
                speculative
                    ? speculative_fetch(lib, env.clock, ds, user, stats)
                    : baseline_fetch(lib, env.clock, ds, user, stats);
            CallbackSet cbs;
            cbs.on_final = [shared, stats, &issue, s](const View& v) {
                shared->result.metrics.reads += 1;
                shared->result.metrics.final_.add(stats->done_ms -
                                                  stats->start_ms);
                if (stats->prelim_ms >= 0) {
                    shared->result.metrics.preliminary.add(stats->prelim_ms -
                                                           stats->start_ms);
                }
                if (stats->misspeculated) {
                    shared->result.misspeculations += 1;
                }
                shared->last_done = std::max(shared->last_done, v.arrival_ms);
                issue(s);
            };
            cbs.on_error = [shared, &issue, s](const ErrorInfo&) {
                shared->result.metrics.errors += 1;
                issue(s);
            };
            fetch.set_callbacks(std::move(cbs));
        } else {
            // Reshuffle the user's references (invalidates speculation on
            // readers elsewhere until anti-entropy catches up).
            if (shared->latest) shared->latest->touch(user);
            const int span = ds.max_refs - ds.min_refs + 1;
            const int count = ds.min_refs + static_cast<int>(rng() % span);
            std::vector<int> refs(count);
            for (auto& r : refs) r = static_cast<int>(rng() % ds.objects);
            const double t0 = env.clock.now();
            CallbackSet cbs;
            cbs.on_final = [shared, t0, &issue, s](const View& v) {
                shared->result.metrics.writes += 1;
                shared->result.metrics.write_.add(v.arrival_ms - t0);
                shared->last_done = std::max(shared->last_done, v.arrival_ms);
                issue(s);
            };
            cbs.on_error = [shared, &issue, s](const ErrorInfo&) {
                shared->result.metrics.errors += 1;
                issue(s);
            };
            lib.invoke_weak(
                   Operation::write(ds.user_key(user), encode_ref_list(refs)))
                .set_callbacks(std::move(cbs));
        }
    };

    for (int s = 0; s < streams; ++s) issue(s);
    env.clock.run_until_idle();

    shared->result.metrics.ops_issued = shared->issued;
    shared->result.metrics.makespan_ms = shared->last_done;
    shared->result.metrics.misspeculations = shared->result.misspeculations;
    return shared->result;
}

TicketRunResult run_ticket_shop(const TicketShopConfig& config,
                                const WanOptions& wan) {
    queue::QueueConfig qcfg;
    qcfg.op_timeout_ms = 5000.0;
    WanOptions w = wan;
    w.sim_seed = config.seed * 7919ull + 13ull;
    QueueEnv env(config.leader_region, config.contact_region,
                 config.retailer_region, config.retailers, qcfg, w);
    env.net.set_jitter_ms(config.jitter_ms);

    std::vector<std::string> stock;
    stock.reserve(config.stock);
    for (int i = 0; i < config.stock; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "tkt%05d", i);
        stock.emplace_back(buf);
    }
    env.cluster->preload(stock);

    struct Shared {
        TicketRunResult result;
        std::vector<std::mt19937_64> rngs;
    };
    auto shared = std::make_shared<Shared>();
    for (int r = 0; r < config.retailers; ++r) {
        shared->rngs.emplace_back(config.seed * 1000003ull + r);
    }

    std::function<void(int, int)> purchase = [&purchase, shared, &env,
                                              &config](int retailer,
                                                       int attempt) {
        struct PurchaseState {
            double t0 = 0.0;
            bool confirmed_on_weak = false;
            double weak_latency = 0.0;
        };
        auto st = std::make_shared<PurchaseState>();
        st->t0 = env.clock.now();

        auto next = [shared, &purchase, &env, retailer] {
            auto& rng = shared->rngs[retailer];
            const double think =
                static_cast<double>(rng() >> 11) * 0x1.0p-53 * 3.0;
            env.clock.schedule_after(think, [&purchase, retailer] {
                purchase(retailer, 0);
            });
        };

        CallbackSet cbs;
        cbs.on_update = [st, shared, &env, &config](const View& v) {
            const auto item = queue::decode_item(v.value);
            if (!item) return;  // local state already looked empty
            const int64_t remaining = config.stock - item->position;
            if (remaining > config.threshold) {
                // Plenty left: confirm now, the dequeue commits behind us.
                st->confirmed_on_weak = true;
                st->weak_latency = env.clock.now() - st->t0;
            }
        };
        cbs.on_final = [st, shared, &env, &config, retailer,
                        next](const View& v) {
            const auto item = queue::decode_item(v.value);
            Purchase p;
            p.retailer = retailer;
            p.confirmed_on_weak = st->confirmed_on_weak;
            if (item) {
                shared->result.dequeued_positions.push_back(item->position);
                p.outcome = Purchase::Outcome::Confirmed;
                p.ticket_position = item->position;
                p.latency_ms = st->confirmed_on_weak
                                   ? st->weak_latency
                                   : env.clock.now() - st->t0;
                shared->result.confirmed += 1;
            } else if (st->confirmed_on_weak) {
                // The buyer was told yes but the stock ran dry underneath.
                p.outcome = Purchase::Outcome::Revoked;
                p.latency_ms = st->weak_latency;
                shared->result.revoked += 1;
            } else {
                p.outcome = Purchase::Outcome::SoldOut;
                p.latency_ms = env.clock.now() - st->t0;
                shared->result.sold_out_observed += 1;
            }
            shared->result.purchases.push_back(p);
            if (p.outcome != Purchase::Outcome::SoldOut) next();
        };
        cbs.on_error = [st, shared, &purchase, retailer, attempt,
                        next](const ErrorInfo&) {
            if (attempt == 0) {
                purchase(retailer, 1);
                return;
            }
            Purchase p;
            p.retailer = retailer;
            p.outcome = Purchase::Outcome::Failed;
            shared->result.purchases.push_back(p);
            shared->result.failed += 1;
            next();
        };

        env.lib(retailer).invoke(Operation::dequeue()).set_callbacks(
            std::move(cbs));
    };

    for (int r = 0; r < config.retailers; ++r) purchase(r, 0);
    env.clock.run_until_idle();
    return shared->result;
}

const char* to_string(NewsScenario scenario) {
    switch (scenario) {
        case NewsScenario::WarmEqual: return "warm-equal";
        case NewsScenario::ColdCache: return "cold-cache";
        case NewsScenario::StaleBackup: return "stale-backup";
    }
    return "?";
}

NewsResult news_read_demo(NewsScenario scenario, const WanOptions& wan,
                          std::ostream* out) {
    tiered::TieredConfig cfg;
    cfg.backup_lag_ms = 30.0;
    TieredEnv env(cfg, wan);
    const std::string key = "news:front";
    const std::string v1 = "breaking: queue drained|markets calm|weather fair";
    env.store->preload(key, v1);

    switch (scenario) {
        case NewsScenario::ColdCache:
            break;
        case NewsScenario::WarmEqual: {
            env.lib->invoke_strong(Operation::read(key));
            env.clock.run_until_idle();
            break;
        }
        case NewsScenario::StaleBackup: {
            env.lib->invoke_strong(Operation::read(key));
            env.clock.run_until_idle();
            env.store->inject_primary_write(
                key, "breaking: stock sold out|markets calm|weather fair");
            break;
        }
    }

    auto result = std::make_shared<NewsResult>();
    auto refresh = [result, out, &env](const View& v) {
        result->views_delivered += 1;
        result->refreshes += 1;
        const bool changed =
            result->displayed.empty() || result->displayed.back() != v.value;
        if (changed) {
            result->content_changes += 1;
            result->displayed.push_back(v.value);
        }
        if (out) {
            (*out) << "[" << format_double(env.clock.now(), 1) << "ms] "
                   << v.level.name << (changed ? " refresh: " : " (unchanged) ")
                   << (changed ? v.value : std::string()) << "\n";
        }
    };

    CallbackSet cbs;
    cbs.on_update = refresh;
    cbs.on_final = refresh;
    env.lib->invoke(Operation::read(key)).set_callbacks(std::move(cbs));
    env.clock.run_until_idle();
    return *result;
}

}  // namespace icg::bench
