#include "starwatch/measure.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace starwatch::measure {

std::optional<double> PrevalenceRow::pct_fake_stars() const {
  if (total_stars == 0) return std::nullopt;
  return 100.0 * static_cast<double>(fake_stars) / static_cast<double>(total_stars);
}
std::optional<double> PrevalenceRow::pct_campaign_accounts() const {
  if (active_accounts == 0) return std::nullopt;
  return 100.0 * static_cast<double>(campaign_accounts_active) /
         static_cast<double>(active_accounts);
}
std::optional<double> PrevalenceRow::pct_campaign_repos() const {
  if (popular_repos == 0) return std::nullopt;
  return 100.0 * static_cast<double>(spiking_campaign_repos) / static_cast<double>(popular_repos);
}

std::vector<PrevalenceRow> prevalence_series(const events::EventStore& store,
                                             const campaigns::FakeStarLedger& ledger,
                                             std::span<const campaigns::CampaignReport> reports,
                                             std::int64_t popular_min_stars) {
  const std::int64_t first = month_of(store.window().start).index();
  const std::int64_t last = month_of(store.window().end).index();
  const auto n_months = static_cast<std::size_t>(last - first + 1);

  std::vector<PrevalenceRow> rows(n_months);
  for (std::size_t i = 0; i < n_months; ++i) {
    rows[i].month = MonthKey::from_index(first + static_cast<std::int64_t>(i));
  }
  const auto slot = [&](UtcSeconds t) { return static_cast<std::size_t>(month_of(t).index() - first); };

  for (const events::StarEvent& s : store.stars()) ++rows[slot(s.time)].total_stars;
  for (const campaigns::LedgerEntry& e : ledger.entries) ++rows[slot(e.time)].fake_stars;

  // Active accounts per month; campaign accounts counted when active.
  std::unordered_set<std::uint32_t> campaign_accounts;
  for (const campaigns::CampaignReport& r : reports) {
    campaign_accounts.insert(r.accounts.begin(), r.accounts.end());
  }
  std::vector<std::unordered_set<std::uint32_t>> active(n_months);
  for (const events::RawEvent& ev : store.events()) active[slot(ev.time)].insert(ev.actor);
  for (std::size_t i = 0; i < n_months; ++i) {
    rows[i].active_accounts = static_cast<std::int64_t>(active[i].size());
    for (const auto a : active[i]) {
      if (campaign_accounts.contains(a)) ++rows[i].campaign_accounts_active;
    }
  }

  // Popular repos per month. A spiking campaign repo always clears the
  // popularity bar in its spike month (its fake count alone exceeds 50).
  std::vector<std::unordered_map<std::uint32_t, std::int64_t>> per_repo(n_months);
  for (const events::StarEvent& s : store.stars()) ++per_repo[slot(s.time)][s.repo];
  for (std::size_t i = 0; i < n_months; ++i) {
    for (const auto& [_, count] : per_repo[i]) {
      if (count >= popular_min_stars) ++rows[i].popular_repos;
    }
  }
  for (const campaigns::CampaignReport& r : reports) {
    for (const MonthKey& m : r.spike_months) {
      const std::int64_t idx = m.index() - first;
      if (idx >= 0 && idx < static_cast<std::int64_t>(n_months)) {
        ++rows[static_cast<std::size_t>(idx)].spiking_campaign_repos;
      }
    }
  }
  return rows;
}

double Ccdf::operator()(double x) const {
  // Fraction strictly greater than x: first support value > x carries it.
  const auto it = std::upper_bound(support.begin(), support.end(), x);
  if (it == support.end()) return 0.0;
  if (it == support.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - support.begin()) - 1];
}

Ccdf make_ccdf(std::span<const double> values) {
  if (values.empty()) throw Error("ccdf of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Ccdf out;
  const auto n = static_cast<double>(sorted.size());
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.support.push_back(sorted[i]);
    out.survival.push_back(static_cast<double>(sorted.size() - j) / n);
    i = j;
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 8> kEightLabels = {"Star",  "Push", "Fork",    "Create",
                                                          "Issue", "PR",   "Comment", "Other"};
constexpr std::array<std::string_view, 5> kFiveLabels = {"Star", "Push", "Fork", "Create", "Other"};

std::size_t class_slot(events::EventTypeClass c, VectorScheme scheme) {
  const auto raw = static_cast<std::size_t>(c);
  if (scheme == VectorScheme::EightClass) return raw;
  switch (c) {
    case events::EventTypeClass::Star:
    case events::EventTypeClass::Push:
    case events::EventTypeClass::Fork:
    case events::EventTypeClass::Create:
      return raw;
    default:
      return 4;  // Issue, PR, Comment fold into Other
  }
}

}  // namespace

std::span<const std::string_view> class_labels(VectorScheme scheme) {
  if (scheme == VectorScheme::EightClass) return kEightLabels;
  return kFiveLabels;
}

std::vector<ActivityVector> activity_vectors(const events::EventStore& store, SubjectKind kind,
                                             VectorScheme scheme,
                                             std::span<const std::uint32_t> subjects) {
  const std::size_t dim = class_labels(scheme).size();
  std::vector<ActivityVector> out;
  out.reserve(subjects.size());
  for (const std::uint32_t subject : subjects) {
    const auto idx =
        kind == SubjectKind::Account ? store.actor_events(subject) : store.repo_events(subject);
    if (idx.empty()) continue;
    ActivityVector v;
    v.subject = subject;
    v.fractions.assign(dim, 0.0);
    for (const auto i : idx) {
      const events::RawEvent& ev = store.events()[i];
      v.fractions[class_slot(events::classify_event(store.kind_name(ev.kind)), scheme)] += 1.0;
    }
    const auto total = static_cast<double>(idx.size());
    for (double& f : v.fractions) f /= total;
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

struct LloydResult {
  std::vector<std::vector<double>> centers;
  std::vector<int> assignments;
  double objective = std::numeric_limits<double>::infinity();
};

LloydResult lloyd_once(std::span<const ActivityVector> vectors, int k, std::uint64_t seed,
                       int max_iters) {
  const std::size_t n = vectors.size();
  const std::size_t dim = vectors[0].fractions.size();
  std::mt19937_64 rng(seed);

  // k-means++ seeding.
  LloydResult r;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  r.centers.push_back(vectors[first(rng)].fractions);
  std::vector<double> d2(n);
  while (r.centers.size() < static_cast<std::size_t>(k)) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : r.centers) best = std::min(best, sq_distance(vectors[i].fractions, c));
      d2[i] = best;
      sum += best;
    }
    if (sum <= 0) {
      // All remaining points coincide with a center; duplicate one.
      r.centers.push_back(vectors[first(rng)].fractions);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, sum);
    double target = u(rng);
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0) {
        chosen = i;
        break;
      }
    }
    r.centers.push_back(vectors[chosen].fractions);
  }

  r.assignments.assign(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_distance(vectors[i].fractions, r.centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (r.assignments[i] != best) {
        r.assignments[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::int64_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = r.assignments[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += vectors[i].fractions[d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its center.
        std::size_t far = 0;
        double far_d = -1;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_distance(vectors[i].fractions, r.centers[r.assignments[i]]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        r.centers[c] = vectors[far].fractions;
        continue;
      }
      for (std::size_t d = 0; d < dim; ++d) r.centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }

  r.objective = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r.objective += sq_distance(vectors[i].fractions, r.centers[r.assignments[i]]);
  }
  return r;
}

ClusterResult kmeans_impl(std::span<const ActivityVector> vectors, int k,
                          const KMeansOptions& options, bool parallel) {
  if (vectors.empty() || static_cast<int>(vectors.size()) < k) {
    throw Error("k-means needs at least k vectors");
  }
  if (k < 1) throw Error("k must be >= 1");

  std::vector<LloydResult> restarts(options.restarts);
  const auto run = [&](int r) {
    restarts[r] = lloyd_once(vectors, k, options.seed + static_cast<std::uint64_t>(r) * 0x9e3779b9ULL,
                             options.max_iters);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < options.restarts; ++r) run(r);
  } else {
    for (int r = 0; r < options.restarts; ++r) run(r);
  }

  int best = 0;
  for (int r = 1; r < options.restarts; ++r) {
    if (restarts[r].objective < restarts[best].objective) best = r;  // ties keep lowest index
  }
  ClusterResult result;
  result.k = k;
  result.centers = std::move(restarts[best].centers);
  result.assignments = std::move(restarts[best].assignments);
  result.objective = restarts[best].objective;
  result.silhouette = mean_silhouette(vectors, result.assignments, k);
  return result;
}

}  // namespace

ClusterResult kmeans_fixed_k(std::span<const ActivityVector> vectors, int k,
                             const KMeansOptions& options) {
  return kmeans_impl(vectors, k, options, true);
}

ClusterResult kmeans_fixed_k_serial(std::span<const ActivityVector> vectors, int k,
                                    const KMeansOptions& options) {
  return kmeans_impl(vectors, k, options, false);
}

std::optional<double> mean_silhouette(std::span<const ActivityVector> vectors,
                                      std::span<const int> assignments, int k) {
  const std::size_t n = vectors.size();
  std::vector<std::int64_t> cluster_size(k, 0);
  for (const int a : assignments) ++cluster_size[a];
  int nonempty = 0;
  for (const auto c : cluster_size) nonempty += c > 0;
  if (nonempty < 2) return std::nullopt;

  double sum = 0;
  bool any_defined = false;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dist_sum(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      dist_sum[assignments[j]] += std::sqrt(sq_distance(vectors[i].fractions, vectors[j].fractions));
    }
    const int own = assignments[i];
    if (cluster_size[own] <= 1) continue;  // singleton: s(i) = 0 by convention
    const double a = dist_sum[own] / static_cast<double>(cluster_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || cluster_size[c] == 0) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(cluster_size[c]));
    }
    const double m = std::max(a, b);
    if (m > 0) {
      sum += (b - a) / m;
      any_defined = true;
    }
    // a == b == 0 contributes 0 but does not make the score defined.
  }
  if (!any_defined) return std::nullopt;
  return sum / static_cast<double>(n);
}

ClusterResult kmeans_cluster(std::span<const ActivityVector> vectors, int k_min, int k_max,
                             const KMeansOptions& options) {
  if (k_min < 1 || k_max < k_min) throw Error("bad k range");
  std::optional<ClusterResult> best;
  std::optional<ClusterResult> smallest;
  for (int k = k_min; k <= std::min<int>(k_max, static_cast<int>(vectors.size())); ++k) {
    ClusterResult r = kmeans_fixed_k(vectors, k, options);
    if (!smallest) smallest = r;
    if (r.silhouette && (!best || !best->silhouette || *r.silhouette > *best->silhouette)) {
      best = std::move(r);
    }
  }
  if (best) return *best;
  if (smallest) return *smallest;  // degenerate data: fall back to smallest k
  throw Error("fewer vectors than the smallest k");
}

std::map<std::string, std::int64_t> name_token_frequency(std::span<const std::string> names) {
  std::map<std::string, std::int64_t> counts;
  std::string token;
  for (const std::string& name : names) {
    token.clear();
    const auto flush = [&] {
      if (token.size() >= 2) ++counts[token];
      token.clear();
    };
    for (const char ch : name) {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      } else {
        flush();
      }
    }
    flush();
  }
  return counts;
}

namespace {

void put_optional(std::ostream& out, std::optional<double> v) {
  if (v) out << *v;
}

}  // namespace

void write_prevalence_csv(std::span<const PrevalenceRow> rows, std::ostream& out) {
  out << "month,fake_stars,total_stars,pct_fake_stars,campaign_accounts_active,active_accounts,"
         "pct_campaign_accounts,spiking_campaign_repos,popular_repos,pct_campaign_repos\n";
  for (const PrevalenceRow& r : rows) {
    out << to_string(r.month) << ',' << r.fake_stars << ',' << r.total_stars << ',';
    put_optional(out, r.pct_fake_stars());
    out << ',' << r.campaign_accounts_active << ',' << r.active_accounts << ',';
    put_optional(out, r.pct_campaign_accounts());
    out << ',' << r.spiking_campaign_repos << ',' << r.popular_repos << ',';
    put_optional(out, r.pct_campaign_repos());
    out << '\n';
  }
}

void write_ccdf_csv(const Ccdf& ccdf, std::ostream& out) {
  out << "value,survival\n";
  for (std::size_t i = 0; i < ccdf.support.size(); ++i) {
    out << ccdf.support[i] << ',' << ccdf.survival[i] << '\n';
  }
}

void write_cluster_csv(const ClusterResult& result, VectorScheme scheme, std::ostream& out) {
  const auto labels = class_labels(scheme);
  out << "cluster,size,share_pct";
  for (const auto& label : labels) out << ',' << label << "_pct";
  out << '\n';
  std::vector<std::int64_t> sizes(result.k, 0);
  for (const int a : result.assignments) ++sizes[a];
  const auto n = static_cast<double>(result.assignments.size());
  for (int c = 0; c < result.k; ++c) {
    out << c << ',' << sizes[c] << ',' << 100.0 * static_cast<double>(sizes[c]) / n;
    for (const double f : result.centers[c]) out << ',' << 100.0 * f;
    out << '\n';
  }
}

void write_token_csv(const std::map<std::string, std::int64_t>& counts, std::ostream& out) {
  std::vector<std::pair<std::string, std::int64_t>> rows(counts.begin(), counts.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(b.second, a.first) < std::tie(a.second, b.first);
  });
  out << "token,count\n";
  for (const auto& [token, count] : rows) out << token << ',' << count << '\n';
}

}  // namespace starwatch::measure
