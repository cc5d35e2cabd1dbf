#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "starwatch/events.hpp"

namespace starwatch::lockstep {

// Bipartite account-repository star graph with time-stamped edges, sorted by
// time within each adjacency list. Ids are shared with the store the graph
// was built from, so chunked subgraphs stay comparable.
struct StarGraph {
  struct Edge {
    UtcSeconds time = 0;
    std::uint32_t other = 0;  // actor for repo lists, repo for account lists
  };

  std::vector<std::vector<Edge>> repo_edges;
  std::vector<std::vector<Edge>> account_edges;
  std::vector<std::string> account_names;
  std::vector<std::string> repo_names;
  std::size_t edge_count = 0;

  std::size_t account_count() const { return account_edges.size(); }
  std::size_t repo_count() const { return repo_edges.size(); }
};

StarGraph build_star_graph(const events::EventStore& store);
// Edges restricted to the chunk interval; id space unchanged.
StarGraph build_star_graph(const events::EventStore& store, const TimeWindow& chunk);
// Convenience constructor for tests and small fixtures.
StarGraph graph_from_triples(
    std::span<const std::tuple<std::string, std::string, UtcSeconds>> stars);

struct LockstepParams {
  std::int64_t min_accounts = 50;  // n
  std::int64_t min_repos = 10;     // m
  double window_days = 30.0;       // delta t
  double coverage = 0.5;           // rho
  double membership = 0.5;         // phi, search-internal
  int max_iters = 20;

  std::int64_t window_seconds() const;
  // Smallest integer cover satisfying >= rho * n; at least 1.
  std::int64_t min_cover() const;
  void validate() const;  // throws ConfigError
};

// Best [t, t+window] cover of `candidates` stars on one repo; windows are
// anchored at star timestamps (sufficient: any window can slide right onto
// its earliest member without losing coverage). Ties resolve to the earliest
// start. `candidates` must be sorted by id.
struct WindowCover {
  UtcSeconds start = 0;
  std::vector<std::uint32_t> covered;  // sorted by id
};
WindowCover best_window(const StarGraph& graph, std::uint32_t repo,
                        std::span<const std::uint32_t> candidates, std::int64_t window_seconds);

struct RepoWitness {
  std::uint32_t repo = 0;
  UtcSeconds window_start = 0;
  std::vector<std::uint32_t> covering;  // sorted by id
};

struct LockstepGroup {
  std::vector<std::uint32_t> users;  // sorted by id
  std::vector<RepoWitness> repos;    // sorted by repo id

  std::vector<std::uint32_t> repo_ids() const;
};

// Decides the lockstep predicate for (users, repos); on success returns the
// witness with, per repo, the earliest maximizing window.
std::optional<LockstepGroup> is_lockstep_group(const StarGraph& graph,
                                               std::span<const std::uint32_t> users,
                                               std::span<const std::uint32_t> repos,
                                               const LockstepParams& params);

// Alternating greedy search seeded at one repository:
//   users <- best-window cover of the seed
//   repeat: repos <- all repos with a window covering >= rho*n of users;
//           users <- accounts starring >= ceil(phi*|repos|) of them in-window
// Emits only groups the predicate confirms.
std::optional<LockstepGroup> copycatch_from_seed(const StarGraph& graph, std::uint32_t seed,
                                                 const LockstepParams& params);

struct FakeStar {
  std::uint32_t actor = 0;
  std::uint32_t repo = 0;
  UtcSeconds time = 0;

  auto operator<=>(const FakeStar&) const = default;
};

struct DetectionResult {
  std::vector<LockstepGroup> groups;     // deduped at user-set Jaccard >= 0.5
  std::vector<FakeStar> fake_stars;      // in-window stars of covering users
};

// Repos gaining at least min_cover stars inside some detection window.
std::vector<std::uint32_t> default_seeds(const StarGraph& graph, const LockstepParams& params);

// Runs copycatch_from_seed over all seeds (OpenMP) and merges in seed order.
DetectionResult run_lockstep_detection(const StarGraph& graph, const LockstepParams& params);
DetectionResult run_lockstep_detection_serial(const StarGraph& graph, const LockstepParams& params);

// Exhaustive oracle: enumerates user subsets, computes each subset's maximal
// satisfying repo set, returns the groups maximal under set inclusion.
// Only for instances with <= 15 accounts and <= 10 repos.
std::vector<LockstepGroup> brute_force_lockstep(const StarGraph& graph,
                                                const LockstepParams& params);

double user_jaccard(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

// Six-month chunks stepped by three months; shorter windows yield one chunk.
struct ChunkPlan {
  std::vector<TimeWindow> chunks;
};
ChunkPlan plan_chunks(const TimeWindow& window);

DetectionResult merge_results(std::span<const DetectionResult> parts);
DetectionResult run_chunked_detection(const events::EventStore& store,
                                      const LockstepParams& params);

void write_groups_jsonl(const StarGraph& graph, std::span<const LockstepGroup> groups,
                        std::ostream& out);
void write_fake_stars_csv(const StarGraph& graph, std::span<const FakeStar> stars,
                          std::string_view signature, std::ostream& out);

}  // namespace starwatch::lockstep
