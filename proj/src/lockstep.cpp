#include "starwatch/lockstep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "starwatch/errors.hpp"

namespace starwatch::lockstep {
namespace {

void sort_adjacency(StarGraph& g) {
  const auto by_time = [](const StarGraph::Edge& a, const StarGraph::Edge& b) {
    return std::tie(a.time, a.other) < std::tie(b.time, b.other);
  };
  for (auto& edges : g.repo_edges) std::sort(edges.begin(), edges.end(), by_time);
  for (auto& edges : g.account_edges) std::sort(edges.begin(), edges.end(), by_time);
}

}  // namespace

StarGraph build_star_graph(const events::EventStore& store) {
  return build_star_graph(store, store.window());
}

StarGraph build_star_graph(const events::EventStore& store, const TimeWindow& chunk) {
  StarGraph g;
  g.repo_edges.resize(store.repo_count());
  g.account_edges.resize(store.actor_count());
  g.account_names.reserve(store.actor_count());
  for (std::uint32_t a = 0; a < store.actor_count(); ++a) g.account_names.push_back(store.actor_name(a));
  g.repo_names.reserve(store.repo_count());
  for (std::uint32_t r = 0; r < store.repo_count(); ++r) g.repo_names.push_back(store.repo_name(r));
  for (const events::StarEvent& s : store.stars()) {
    if (!chunk.contains(s.time)) continue;
    g.repo_edges[s.repo].push_back({s.time, s.actor});
    g.account_edges[s.actor].push_back({s.time, s.repo});
    ++g.edge_count;
  }
  sort_adjacency(g);
  return g;
}

StarGraph graph_from_triples(
    std::span<const std::tuple<std::string, std::string, UtcSeconds>> stars) {
  events::Interner accounts, repos;
  StarGraph g;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& [actor, repo, time] : stars) {
    const std::uint32_t a = accounts.intern(actor);
    const std::uint32_t r = repos.intern(repo);
    if (a >= g.account_edges.size()) g.account_edges.resize(a + 1);
    if (r >= g.repo_edges.size()) g.repo_edges.resize(r + 1);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | r;
    if (!seen.insert(key).second) continue;  // one edge per pair
    g.repo_edges[r].push_back({time, a});
    g.account_edges[a].push_back({time, r});
    ++g.edge_count;
  }
  for (std::uint32_t a = 0; a < accounts.size(); ++a) g.account_names.push_back(accounts.name(a));
  for (std::uint32_t r = 0; r < repos.size(); ++r) g.repo_names.push_back(repos.name(r));
  sort_adjacency(g);
  return g;
}

std::int64_t LockstepParams::window_seconds() const {
  return std::llround(window_days * static_cast<double>(kSecondsPerDay));
}

std::int64_t LockstepParams::min_cover() const {
  const auto c = static_cast<std::int64_t>(
      std::ceil(coverage * static_cast<double>(min_accounts) - 1e-9));
  return std::max<std::int64_t>(c, 1);
}

void LockstepParams::validate() const {
  if (min_accounts < 1 || min_repos < 1) throw ConfigError("lockstep: n and m must be >= 1");
  if (window_days <= 0) throw ConfigError("lockstep: window_days must be positive");
  if (coverage <= 0 || coverage > 1) throw ConfigError("lockstep: coverage must be in (0, 1]");
  if (membership <= 0 || membership > 1) throw ConfigError("lockstep: membership must be in (0, 1]");
  if (max_iters < 1) throw ConfigError("lockstep: max_iters must be >= 1");
}

WindowCover best_window(const StarGraph& graph, std::uint32_t repo,
                        std::span<const std::uint32_t> candidates, std::int64_t window_seconds) {
  WindowCover out;
  const auto& edges = graph.repo_edges[repo];
  std::vector<const StarGraph::Edge*> hits;
  hits.reserve(edges.size());
  for (const auto& e : edges) {
    if (std::binary_search(candidates.begin(), candidates.end(), e.other)) hits.push_back(&e);
  }
  if (hits.empty()) return out;

  std::size_t best_begin = 0, best_count = 0;
  for (std::size_t i = 0, j = 0; i < hits.size(); ++i) {
    if (j < i) j = i;
    while (j < hits.size() && hits[j]->time <= hits[i]->time + window_seconds) ++j;
    if (j - i > best_count) {  // strict: ties keep the earliest start
      best_count = j - i;
      best_begin = i;
    }
  }
  out.start = hits[best_begin]->time;
  out.covered.reserve(best_count);
  for (std::size_t i = best_begin; i < best_begin + best_count; ++i) out.covered.push_back(hits[i]->other);
  std::sort(out.covered.begin(), out.covered.end());
  return out;
}

std::vector<std::uint32_t> LockstepGroup::repo_ids() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(repos.size());
  for (const RepoWitness& w : repos) ids.push_back(w.repo);
  return ids;
}

std::optional<LockstepGroup> is_lockstep_group(const StarGraph& graph,
                                               std::span<const std::uint32_t> users,
                                               std::span<const std::uint32_t> repos,
                                               const LockstepParams& params) {
  if (static_cast<std::int64_t>(users.size()) < params.min_accounts) return std::nullopt;
  if (static_cast<std::int64_t>(repos.size()) < params.min_repos) return std::nullopt;

  LockstepGroup group;
  group.users.assign(users.begin(), users.end());
  std::sort(group.users.begin(), group.users.end());

  std::vector<std::uint32_t> repo_ids(repos.begin(), repos.end());
  std::sort(repo_ids.begin(), repo_ids.end());
  const std::int64_t need = params.min_cover();
  for (const std::uint32_t r : repo_ids) {
    WindowCover cover = best_window(graph, r, group.users, params.window_seconds());
    if (static_cast<std::int64_t>(cover.covered.size()) < need) return std::nullopt;
    group.repos.push_back(RepoWitness{r, cover.start, std::move(cover.covered)});
  }
  return group;
}

namespace {

// Repos reachable from any user in U, with the count of U members starring
// them at any time (an upper bound on window coverage).
std::vector<std::pair<std::uint32_t, std::int64_t>> candidate_repos(
    const StarGraph& graph, std::span<const std::uint32_t> users) {
  std::unordered_map<std::uint32_t, std::int64_t> counts;
  for (const std::uint32_t u : users) {
    for (const auto& e : graph.account_edges[u]) ++counts[e.other];
  }
  std::vector<std::pair<std::uint32_t, std::int64_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t membership_need(const LockstepParams& params, std::size_t n_repos) {
  const auto need = static_cast<std::int64_t>(
      std::ceil(params.membership * static_cast<double>(n_repos) - 1e-9));
  return std::max<std::int64_t>(need, 1);
}

}  // namespace

std::optional<LockstepGroup> copycatch_from_seed(const StarGraph& graph, std::uint32_t seed,
                                                 const LockstepParams& params) {
  const std::int64_t window = params.window_seconds();
  const std::int64_t need_cover = params.min_cover();

  // Step 1: the seed's best window over all of its stargazers.
  std::vector<std::uint32_t> all;
  all.reserve(graph.repo_edges[seed].size());
  for (const auto& e : graph.repo_edges[seed]) all.push_back(e.other);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<std::uint32_t> users = best_window(graph, seed, all, window).covered;
  if (static_cast<std::int64_t>(users.size()) < need_cover) return std::nullopt;

  std::vector<RepoWitness> repos;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    // Repo step: every repo whose best window over the current users reaches
    // the coverage threshold.
    std::vector<RepoWitness> next_repos;
    for (const auto& [repo, upper] : candidate_repos(graph, users)) {
      if (upper < need_cover) continue;
      WindowCover cover = best_window(graph, repo, users, window);
      if (static_cast<std::int64_t>(cover.covered.size()) < need_cover) continue;
      next_repos.push_back(RepoWitness{repo, cover.start, std::move(cover.covered)});
    }
    if (next_repos.empty()) return std::nullopt;

    // User step: accounts starring enough of the group's repos inside the
    // chosen windows. Not restricted to the current users, so the group can
    // grow back toward the full block.
    const std::int64_t need_repos = membership_need(params, next_repos.size());
    std::unordered_map<std::uint32_t, std::int64_t> stamps;
    for (const RepoWitness& w : next_repos) {
      for (const auto& e : graph.repo_edges[w.repo]) {
        if (e.time >= w.window_start && e.time <= w.window_start + window) ++stamps[e.other];
      }
    }
    std::vector<std::uint32_t> next_users;
    for (const auto& [u, c] : stamps) {
      if (c >= need_repos) next_users.push_back(u);
    }
    std::sort(next_users.begin(), next_users.end());
    if (next_users.empty()) return std::nullopt;

    const bool stable = next_users == users && next_repos.size() == repos.size() &&
                        std::equal(next_repos.begin(), next_repos.end(), repos.begin(),
                                   [](const RepoWitness& a, const RepoWitness& b) {
                                     return a.repo == b.repo;
                                   });
    users = std::move(next_users);
    repos = std::move(next_repos);
    if (stable) break;
  }

  // Soundness gate: only groups passing the predicate are emitted, with the
  // witness recomputed by the predicate itself.
  std::vector<std::uint32_t> repo_ids;
  repo_ids.reserve(repos.size());
  for (const RepoWitness& w : repos) repo_ids.push_back(w.repo);
  return is_lockstep_group(graph, users, repo_ids, params);
}

std::vector<std::uint32_t> default_seeds(const StarGraph& graph, const LockstepParams& params) {
  const std::int64_t window = params.window_seconds();
  const std::int64_t need = params.min_cover();
  std::vector<std::uint32_t> seeds;
  for (std::uint32_t repo = 0; repo < graph.repo_count(); ++repo) {
    const auto& edges = graph.repo_edges[repo];
    if (static_cast<std::int64_t>(edges.size()) < need) continue;
    std::size_t best = 0;
    for (std::size_t i = 0, j = 0; i < edges.size(); ++i) {
      if (j < i) j = i;
      while (j < edges.size() && edges[j].time <= edges[i].time + window) ++j;
      best = std::max(best, j - i);
    }
    if (static_cast<std::int64_t>(best) >= need) seeds.push_back(repo);
  }
  return seeds;
}

double user_jaccard(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void sorted_union(std::vector<std::uint32_t>& into, std::span<const std::uint32_t> other) {
  std::vector<std::uint32_t> merged;
  merged.reserve(into.size() + other.size());
  std::set_union(into.begin(), into.end(), other.begin(), other.end(), std::back_inserter(merged));
  into = std::move(merged);
}

// Greedy in-order merge: each group joins the first accumulated group whose
// user set overlaps at Jaccard >= 0.5. Window witnesses of already-present
// repos are kept.
void merge_group(std::vector<LockstepGroup>& merged, const LockstepGroup& g) {
  for (LockstepGroup& m : merged) {
    if (user_jaccard(m.users, g.users) < 0.5) continue;
    sorted_union(m.users, g.users);
    for (const RepoWitness& w : g.repos) {
      const auto at = std::lower_bound(
          m.repos.begin(), m.repos.end(), w.repo,
          [](const RepoWitness& lhs, std::uint32_t r) { return lhs.repo < r; });
      if (at != m.repos.end() && at->repo == w.repo) continue;
      m.repos.insert(at, w);
    }
    return;
  }
  merged.push_back(g);
}

void collect_fake_stars(const StarGraph& graph, const LockstepGroup& g,
                        const LockstepParams& params,
                        std::unordered_set<std::uint64_t>& seen, std::vector<FakeStar>& out) {
  const std::int64_t window = params.window_seconds();
  for (const RepoWitness& w : g.repos) {
    for (const auto& e : graph.repo_edges[w.repo]) {
      if (e.time < w.window_start || e.time > w.window_start + window) continue;
      if (!std::binary_search(w.covering.begin(), w.covering.end(), e.other)) continue;
      const std::uint64_t key = (static_cast<std::uint64_t>(e.other) << 32) | w.repo;
      if (seen.insert(key).second) out.push_back(FakeStar{e.other, w.repo, e.time});
    }
  }
}

DetectionResult detect_with_seeds(const StarGraph& graph, const LockstepParams& params,
                                  std::span<const std::uint32_t> seeds, bool parallel) {
  std::vector<std::optional<LockstepGroup>> slots(seeds.size());
  if (parallel) {
    const auto n = static_cast<std::int64_t>(seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) slots[i] = copycatch_from_seed(graph, seeds[i], params);
  } else {
    for (std::size_t i = 0; i < seeds.size(); ++i) slots[i] = copycatch_from_seed(graph, seeds[i], params);
  }

  DetectionResult result;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& slot : slots) {
    if (!slot) continue;
    // Fake stars come from every verified emission, so a merge cannot drop
    // covered users of a deduplicated group.
    collect_fake_stars(graph, *slot, params, seen, result.fake_stars);
    merge_group(result.groups, *slot);
  }
  std::sort(result.fake_stars.begin(), result.fake_stars.end());
  return result;
}

}  // namespace

DetectionResult run_lockstep_detection(const StarGraph& graph, const LockstepParams& params) {
  params.validate();
  return detect_with_seeds(graph, params, default_seeds(graph, params), true);
}

DetectionResult run_lockstep_detection_serial(const StarGraph& graph,
                                              const LockstepParams& params) {
  params.validate();
  return detect_with_seeds(graph, params, default_seeds(graph, params), false);
}

std::vector<LockstepGroup> brute_force_lockstep(const StarGraph& graph,
                                                const LockstepParams& params) {
  const std::size_t n_accounts = graph.account_count();
  const std::size_t n_repos = graph.repo_count();
  if (n_accounts > 15 || n_repos > 10) {
    throw InstanceTooLargeError("brute-force oracle limited to 15 accounts x 10 repos");
  }
  const std::int64_t window = params.window_seconds();
  const std::int64_t need = params.min_cover();

  // Per-repo star lists as (time, account-bit) pairs.
  struct MaskedStar {
    UtcSeconds time;
    std::uint32_t bit;
  };
  std::vector<std::vector<MaskedStar>> repo_stars(n_repos);
  for (std::uint32_t r = 0; r < n_repos; ++r) {
    for (const auto& e : graph.repo_edges[r]) {
      repo_stars[r].push_back({e.time, 1u << e.other});
    }
  }

  const std::uint32_t n_masks = 1u << n_accounts;
  const auto repo_set_for = [&](std::uint32_t user_mask) {
    std::uint32_t repo_mask = 0;
    for (std::uint32_t r = 0; r < n_repos; ++r) {
      const auto& stars = repo_stars[r];
      std::int64_t best = 0;
      for (std::size_t i = 0; i < stars.size(); ++i) {
        if ((stars[i].bit & user_mask) == 0) continue;
        std::int64_t count = 0;
        for (std::size_t j = i; j < stars.size() && stars[j].time <= stars[i].time + window; ++j) {
          if (stars[j].bit & user_mask) ++count;
        }
        best = std::max(best, count);
      }
      if (best >= need) repo_mask |= 1u << r;
    }
    return repo_mask;
  };

  // Satisfying repo set per user subset, for subsets of at least n users.
  std::vector<std::uint32_t> repo_mask_of(n_masks, 0);
  std::vector<bool> is_candidate(n_masks, false);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    if (std::popcount(mask) < params.min_accounts) continue;
    repo_mask_of[mask] = repo_set_for(mask);
    is_candidate[mask] = std::popcount(repo_mask_of[mask]) >= params.min_repos;
  }

  // Maximality: a candidate survives when no one-account extension yields a
  // candidate dominating it on both sides.
  std::vector<LockstepGroup> maximal;
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    if (!is_candidate[mask]) continue;
    bool dominated = false;
    for (std::uint32_t a = 0; a < n_accounts && !dominated; ++a) {
      const std::uint32_t ext = mask | (1u << a);
      if (ext == mask) continue;
      if (is_candidate[ext] && (repo_mask_of[mask] & ~repo_mask_of[ext]) == 0) dominated = true;
    }
    if (dominated) continue;
    std::vector<std::uint32_t> users, repos;
    for (std::uint32_t a = 0; a < n_accounts; ++a) {
      if (mask & (1u << a)) users.push_back(a);
    }
    for (std::uint32_t r = 0; r < n_repos; ++r) {
      if (repo_mask_of[mask] & (1u << r)) repos.push_back(r);
    }
    if (auto group = is_lockstep_group(graph, users, repos, params)) maximal.push_back(std::move(*group));
  }
  return maximal;
}

ChunkPlan plan_chunks(const TimeWindow& window) {
  ChunkPlan plan;
  if (add_calendar_months(window.start, 6) >= window.end) {
    plan.chunks.push_back(window);
    return plan;
  }
  for (int k = 0;; ++k) {
    const UtcSeconds start = add_calendar_months(window.start, 3 * k);
    const UtcSeconds end = std::min(add_calendar_months(start, 6), window.end);
    plan.chunks.push_back(TimeWindow{start, end});
    if (end >= window.end) break;
  }
  return plan;
}

DetectionResult merge_results(std::span<const DetectionResult> parts) {
  DetectionResult merged;
  std::unordered_set<std::uint64_t> seen;
  for (const DetectionResult& part : parts) {
    for (const LockstepGroup& g : part.groups) merge_group(merged.groups, g);
    for (const FakeStar& s : part.fake_stars) {
      const std::uint64_t key = (static_cast<std::uint64_t>(s.actor) << 32) | s.repo;
      if (seen.insert(key).second) merged.fake_stars.push_back(s);
    }
  }
  std::sort(merged.fake_stars.begin(), merged.fake_stars.end());
  return merged;
}

DetectionResult run_chunked_detection(const events::EventStore& store,
                                      const LockstepParams& params) {
  const ChunkPlan plan = plan_chunks(store.window());
  std::vector<DetectionResult> parts;
  parts.reserve(plan.chunks.size());
  for (const TimeWindow& chunk : plan.chunks) {
    const StarGraph graph = build_star_graph(store, chunk);
    parts.push_back(run_lockstep_detection(graph, params));
  }
  return merge_results(parts);
}

void write_groups_jsonl(const StarGraph& graph, std::span<const LockstepGroup> groups,
                        std::ostream& out) {
  for (const LockstepGroup& g : groups) {
    nlohmann::json j;
    auto& users = j["users"] = nlohmann::json::array();
    std::vector<std::string> names;
    names.reserve(g.users.size());
    for (const auto u : g.users) names.push_back(graph.account_names[u]);
    std::sort(names.begin(), names.end());
    for (auto& n : names) users.push_back(std::move(n));
    auto& repos = j["repos"] = nlohmann::json::array();
    for (const RepoWitness& w : g.repos) {
      nlohmann::json rj;
      rj["repo"] = graph.repo_names[w.repo];
      rj["window_start"] = format_iso8601_utc(w.window_start);
      std::vector<std::string> covering;
      covering.reserve(w.covering.size());
      for (const auto u : w.covering) covering.push_back(graph.account_names[u]);
      std::sort(covering.begin(), covering.end());
      rj["covering_users"] = covering;
      repos.push_back(std::move(rj));
    }
    out << j.dump() << '\n';
  }
}

void write_fake_stars_csv(const StarGraph& graph, std::span<const FakeStar> stars,
                          std::string_view signature, std::ostream& out) {
  out << "actor_id,repo_id,timestamp,signature\n";
  for (const FakeStar& s : stars) {
    out << graph.account_names[s.actor] << ',' << graph.repo_names[s.repo] << ','
        << format_iso8601_utc(s.time) << ',' << signature << '\n';
  }
}

}  // namespace starwatch::lockstep
