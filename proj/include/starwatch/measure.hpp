#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "starwatch/campaigns.hpp"
#include "starwatch/events.hpp"

namespace starwatch::measure {

// One month of the prevalence series: fake stars against all stars, campaign
// accounts against active accounts, spiking campaign repos against repos
// that gathered at least `popular_min_stars` stars that month.
struct PrevalenceRow {
  MonthKey month;
  std::int64_t fake_stars = 0;
  std::int64_t total_stars = 0;
  std::int64_t campaign_accounts_active = 0;
  std::int64_t active_accounts = 0;
  std::int64_t spiking_campaign_repos = 0;
  std::int64_t popular_repos = 0;

  std::optional<double> pct_fake_stars() const;
  std::optional<double> pct_campaign_accounts() const;
  std::optional<double> pct_campaign_repos() const;
};

std::vector<PrevalenceRow> prevalence_series(const events::EventStore& store,
                                             const campaigns::FakeStarLedger& ledger,
                                             std::span<const campaigns::CampaignReport> reports,
                                             std::int64_t popular_min_stars = 50);

// Survival function: fraction of the sample strictly greater than x.
struct Ccdf {
  std::vector<double> support;   // sorted distinct values
  std::vector<double> survival;  // P(X > support[i])

  double operator()(double x) const;
};
Ccdf make_ccdf(std::span<const double> values);  // throws on empty input

enum class SubjectKind { Account, Repo };
// FiveClass folds Issue, PR and Comment into Other, leaving the five columns
// Star, Push, Fork, Create, Other.
enum class VectorScheme { EightClass, FiveClass };

std::span<const std::string_view> class_labels(VectorScheme scheme);

// L1-normalized per-subject event-class shares; zero-event subjects excluded.
struct ActivityVector {
  std::uint32_t subject = 0;
  std::vector<double> fractions;
};
std::vector<ActivityVector> activity_vectors(const events::EventStore& store, SubjectKind kind,
                                             VectorScheme scheme,
                                             std::span<const std::uint32_t> subjects);

struct ClusterResult {
  int k = 0;
  std::vector<std::vector<double>> centers;
  std::vector<int> assignments;
  double objective = 0.0;                 // total within-cluster squared distance
  std::optional<double> silhouette;       // absent when degenerate
};

struct KMeansOptions {
  int restarts = 8;
  std::uint64_t seed = 1;
  int max_iters = 100;
};

// k-means++ with Lloyd iterations; restarts run in parallel and the best
// objective wins (ties to the lowest restart index).
ClusterResult kmeans_fixed_k(std::span<const ActivityVector> vectors, int k,
                             const KMeansOptions& options = {});
ClusterResult kmeans_fixed_k_serial(std::span<const ActivityVector> vectors, int k,
                                    const KMeansOptions& options = {});

// Chooses k in [k_min, k_max] by the highest mean silhouette; degenerate data
// (undefined silhouette everywhere) falls back to the smallest k.
ClusterResult kmeans_cluster(std::span<const ActivityVector> vectors, int k_min = 2, int k_max = 8,
                             const KMeansOptions& options = {});

std::optional<double> mean_silhouette(std::span<const ActivityVector> vectors,
                                      std::span<const int> assignments, int k);

// Lowercases, splits on non-alphanumeric runs, drops tokens shorter than 2.
std::map<std::string, std::int64_t> name_token_frequency(std::span<const std::string> names);

void write_prevalence_csv(std::span<const PrevalenceRow> rows, std::ostream& out);
void write_ccdf_csv(const Ccdf& ccdf, std::ostream& out);
void write_cluster_csv(const ClusterResult& result, VectorScheme scheme, std::ostream& out);
void write_token_csv(const std::map<std::string, std::int64_t>& counts, std::ostream& out);

}  // namespace starwatch::measure
