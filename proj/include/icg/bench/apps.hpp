#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "icg/bench/runner.hpp"

namespace icg::bench {

// ---------------------------------------------------------------------------
// Reference-chasing applications (ads, timelines): step 1 reads a list of
// references, step 2 fetches the referenced objects. The speculative variant
// reads the references with both levels and prefetches from the preliminary
// list; a confirmed speculation closes as soon as the final references
// arrive, hiding the prefetch latency.
// ---------------------------------------------------------------------------

struct RefDatasetSpec {
    int users = 1000;
    int objects = 2300;
    int min_refs = 1;
    int max_refs = 40;
    int object_size = 100;
    uint64_t seed = 1;
    std::string user_key_prefix = "profile:";
    std::string object_key_prefix = "ad:";

    std::string user_key(int user) const {
        return user_key_prefix + std::to_string(user);
    }
    std::string object_key(int object) const {
        return object_key_prefix + std::to_string(object);
    }
};

std::string encode_ref_list(const std::vector<int>& refs);
std::vector<int> decode_ref_list(const std::string& bytes);

/// Generates and preloads the dataset; returns the per-user reference lists.
std::vector<std::vector<int>> load_ref_dataset(quorum::QuorumCluster& cluster,
                                               const RefDatasetSpec& spec);

struct FetchStats {
    double start_ms = 0.0;
    double prelim_ms = -1.0;
    double final_ms = -1.0;
    double done_ms = -1.0;
    bool misspeculated = false;
    bool failed = false;
};

/// Speculative two-step fetch (ICG read of the references, prefetch from
/// the preliminary view, confirm or refetch at the final view). The
/// returned correctable closes with the concatenated object payloads.
Correctable speculative_fetch(Library& lib, sim::SimClock& clock,
                              const RefDatasetSpec& spec, int user,
                              std::shared_ptr<FetchStats> stats);

/// Strong-only baseline of the same two-step fetch (no speculation).
Correctable baseline_fetch(Library& lib, sim::SimClock& clock,
                           const RefDatasetSpec& spec, int user,
                           std::shared_ptr<FetchStats> stats);

struct CaseStudyResult {
    Metrics metrics;  // final_ carries end-to-end fetch latencies
    long fetches = 0;
    long misspeculations = 0;
};

/// Mixed workload of fetches and profile-reshuffling writes over one
/// quorum environment.
CaseStudyResult run_ref_case_study(QuorumEnv& env, const RefDatasetSpec& ds,
                                   const WorkloadSpec& spec, bool speculative);

// ---------------------------------------------------------------------------
// Ticket shop over the replicated queue (dynamic consistency selection).
// ---------------------------------------------------------------------------

struct TicketShopConfig {
    int stock = 500;
    int retailers = 4;
    int threshold = 20;
    uint64_t seed = 0;
    double jitter_ms = 2.0;
    std::string leader_region = "IRL";
    std::string contact_region = "FRK";  // retailers sit next to this replica
    std::string retailer_region = "FRK";
};

struct Purchase {
    enum class Outcome { Confirmed, Revoked, SoldOut, Failed };
    Outcome outcome = Outcome::SoldOut;
    bool confirmed_on_weak = false;
    int64_t ticket_position = 0;  // for Confirmed
    double latency_ms = 0.0;      // to the confirmation the buyer saw
    int retailer = 0;
};

struct TicketRunResult {
    long confirmed = 0;
    long revoked = 0;  // confirmed on weak, later contradicted by a null final
    long sold_out_observed = 0;
    long failed = 0;
    std::vector<Purchase> purchases;          // in completion order
    std::vector<int64_t> dequeued_positions;  // every non-null strong result
};

/// Runs retailers draining the stock with ICG dequeues and the threshold
/// rule: confirm on the weak view while the remaining stock indicator
/// (stock - ticketNr) exceeds the threshold, otherwise wait for the strong
/// view. A timed-out purchase is retried once.
TicketRunResult run_ticket_shop(const TicketShopConfig& config,
                                const WanOptions& wan);

// ---------------------------------------------------------------------------
// News reader over the tiered binding: progressive display.
// ---------------------------------------------------------------------------

enum class NewsScenario { WarmEqual, ColdCache, StaleBackup };

struct NewsResult {
    int views_delivered = 0;
    int refreshes = 0;        // refresh calls, one per view
    int content_changes = 0;  // refreshes that changed the display
    std::vector<std::string> displayed;  // display history
};

const char* to_string(NewsScenario scenario);

/// One progressive read of the front page; every view refreshes the
/// display. `out`, when given, receives one line per refresh.
NewsResult news_read_demo(NewsScenario scenario, const WanOptions& wan,
                          std::ostream* out = nullptr);

}  // namespace icg::bench
