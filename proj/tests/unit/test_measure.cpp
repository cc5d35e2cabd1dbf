#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "helpers.hpp"
#include "starwatch/measure.hpp"

using namespace starwatch;
using namespace starwatch::measure;
using testutil::ts;

namespace {

const TimeWindow kYear = testutil::window("2024-01-01T00:00:00Z", "2024-12-31T23:59:59Z");

// Published five-column cluster centers used as mixture generators, plus the
// observed cluster shares.
const std::vector<std::vector<double>> kCenters = {
    {0.9556, 0.0100, 0.0069, 0.0210, 0.0065},
    {0.2855, 0.4044, 0.0255, 0.1794, 0.1052},
    {0.5234, 0.0108, 0.4374, 0.0176, 0.0108},
};
const std::vector<double> kShares = {0.7775, 0.1476, 0.0749};

std::vector<ActivityVector> sample_mixture(std::uint64_t seed, int n, double noise = 0.03) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> which(kShares.begin(), kShares.end());
  std::normal_distribution<double> jitter(0.0, noise);
  std::vector<ActivityVector> out;
  for (int i = 0; i < n; ++i) {
    const auto& center = kCenters[which(rng)];
    ActivityVector v;
    v.subject = static_cast<std::uint32_t>(i);
    v.fractions.resize(center.size());
    double sum = 0;
    for (std::size_t d = 0; d < center.size(); ++d) {
      v.fractions[d] = std::max(center[d] + jitter(rng), 0.0);
      sum += v.fractions[d];
    }
    for (double& f : v.fractions) f /= sum;
    out.push_back(std::move(v));
  }
  return out;
}

double l1(std::span<const double> a, std::span<const double> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace

TEST_CASE("ccdf: worked examples") {
  const std::vector<double> values = {1, 1, 10};
  const Ccdf c = make_ccdf(values);
  CHECK(c(5) == doctest::Approx(1.0 / 3.0));
  CHECK(c(0.5) == doctest::Approx(1.0));
  CHECK(c(10) == doctest::Approx(0.0));
  CHECK(c(1) == doctest::Approx(1.0 / 3.0));

  const std::vector<double> equal = {4, 4, 4};
  CHECK(make_ccdf(equal)(4) == doctest::Approx(0.0));

  CHECK_THROWS(make_ccdf({}));
}

TEST_CASE("ccdf matches direct counting on seeded exponential draws") {
  std::mt19937_64 rng(2025);
  std::exponential_distribution<double> exp_draw(0.1);
  std::vector<double> values;
  for (int i = 0; i < 1000; ++i) values.push_back(exp_draw(rng));
  const Ccdf c = make_ccdf(values);
  std::uniform_real_distribution<double> probe(0.0, 60.0);
  for (int i = 0; i < 10; ++i) {
    const double x = probe(rng);
    std::size_t greater = 0;
    for (const double v : values) greater += v > x;
    CHECK(c(x) == doctest::Approx(static_cast<double>(greater) / 1000.0));
  }
}

TEST_CASE("ccdf is nonincreasing and ends at zero") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> draw(0.0, 100.0);
  std::vector<double> values;
  for (int i = 0; i < 300; ++i) values.push_back(draw(rng));
  const Ccdf c = make_ccdf(values);
  CHECK(c.survival.front() <= 1.0);
  for (std::size_t i = 1; i < c.survival.size(); ++i) CHECK(c.survival[i] <= c.survival[i - 1]);
  CHECK(c.survival.back() == doctest::Approx(0.0));
  CHECK(c(1e18) == doctest::Approx(0.0));
}

TEST_CASE("activity vectors are L1-normalized and skip empty subjects") {
  const auto store = testutil::make_store(
      kYear, {{"a", "o/x", "WatchEvent", ts("2024-02-01T00:00:00Z")},
              {"a", "o/x", "PushEvent", ts("2024-02-02T00:00:00Z")},
              {"a", "o/x", "PushEvent", ts("2024-02-03T00:00:00Z")},
              {"a", "o/x", "IssuesEvent", ts("2024-02-04T00:00:00Z")},
              {"b", "o/x", "WatchEvent", ts("2024-02-05T00:00:00Z")}});
  const std::vector<std::uint32_t> subjects = {*store.find_actor("a"), *store.find_actor("b")};
  SUBCASE("eight classes") {
    const auto vecs = activity_vectors(store, SubjectKind::Account, VectorScheme::EightClass,
                                       subjects);
    REQUIRE(vecs.size() == 2);
    for (const auto& v : vecs) {
      double sum = 0;
      for (const double f : v.fractions) sum += f;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(v.fractions.size() == 8);
    }
    CHECK(vecs[0].fractions[0] == doctest::Approx(0.25));  // Star share
    CHECK(vecs[0].fractions[1] == doctest::Approx(0.50));  // Push share
  }
  SUBCASE("five classes fold Issue/PR/Comment into Other") {
    const auto vecs =
        activity_vectors(store, SubjectKind::Account, VectorScheme::FiveClass, subjects);
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0].fractions.size() == 5);
    CHECK(vecs[0].fractions[4] == doctest::Approx(0.25));  // the issue landed in Other
  }
}

TEST_CASE("k selection recovers a three-center mixture") {
  const auto vectors = sample_mixture(1, 600);
  KMeansOptions opts;
  opts.restarts = 8;
  opts.seed = 9;
  const ClusterResult result = kmeans_cluster(vectors, 2, 8, opts);
  CHECK(result.k == 3);
  REQUIRE(result.silhouette.has_value());
  CHECK(*result.silhouette > 0.5);

  // Each generator center is matched by one recovered center within L1 0.1.
  for (const auto& truth : kCenters) {
    double best = 1e9;
    for (const auto& center : result.centers) best = std::min(best, l1(center, truth));
    CHECK(best < 0.1);
  }
}

TEST_CASE("all-identical vectors: silhouette is absent, smallest k returned") {
  std::vector<ActivityVector> vectors;
  for (int i = 0; i < 12; ++i) {
    vectors.push_back(ActivityVector{static_cast<std::uint32_t>(i), {0.5, 0.25, 0.25, 0.0, 0.0}});
  }
  const ClusterResult result = kmeans_cluster(vectors, 2, 5, KMeansOptions{});
  CHECK(result.k == 2);
  CHECK_FALSE(result.silhouette.has_value());
}

TEST_CASE("fewer vectors than k is an error") {
  std::vector<ActivityVector> vectors = sample_mixture(3, 3);
  CHECK_THROWS(kmeans_fixed_k(vectors, 4, KMeansOptions{}));
  CHECK_THROWS(kmeans_cluster(std::vector<ActivityVector>{}, 2, 4, KMeansOptions{}));
}

TEST_CASE("converged objective is not beaten by 1000 random restarts") {
  const auto vectors = sample_mixture(17, 120, 0.08);
  const int k = 3;
  KMeansOptions opts;
  opts.restarts = 12;
  opts.seed = 5;
  const ClusterResult best = kmeans_fixed_k(vectors, k, opts);

  // Independent mini-Lloyd with random initial centers.
  std::mt19937_64 rng(999);
  std::uniform_int_distribution<std::size_t> pick(0, vectors.size() - 1);
  double best_restart = 1e18;
  for (int restart = 0; restart < 1000; ++restart) {
    std::vector<std::vector<double>> centers;
    std::set<std::size_t> chosen;
    while (centers.size() < static_cast<std::size_t>(k)) {
      const std::size_t i = pick(rng);
      if (chosen.insert(i).second) centers.push_back(vectors[i].fractions);
    }
    std::vector<int> assign(vectors.size(), 0);
    for (int iter = 0; iter < 60; ++iter) {
      bool changed = false;
      for (std::size_t i = 0; i < vectors.size(); ++i) {
        int arg = 0;
        double dmin = 1e18;
        for (int c = 0; c < k; ++c) {
          double d = 0;
          for (std::size_t x = 0; x < centers[c].size(); ++x) {
            const double diff = vectors[i].fractions[x] - centers[c][x];
            d += diff * diff;
          }
          if (d < dmin) {
            dmin = d;
            arg = c;
          }
        }
        if (assign[i] != arg) {
          assign[i] = arg;
          changed = true;
        }
      }
      std::vector<std::vector<double>> sums(k, std::vector<double>(centers[0].size(), 0.0));
      std::vector<int> counts(k, 0);
      for (std::size_t i = 0; i < vectors.size(); ++i) {
        ++counts[assign[i]];
        for (std::size_t x = 0; x < sums[0].size(); ++x) {
          sums[assign[i]][x] += vectors[i].fractions[x];
        }
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t x = 0; x < sums[0].size(); ++x) centers[c][x] = sums[c][x] / counts[c];
      }
      if (!changed && iter > 0) break;
    }
    double objective = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      for (std::size_t x = 0; x < centers[0].size(); ++x) {
        const double diff = vectors[i].fractions[x] - centers[assign[i]][x];
        objective += diff * diff;
      }
    }
    best_restart = std::min(best_restart, objective);
  }
  CHECK(best.objective <= best_restart + 1e-9);
}

TEST_CASE("final assignment is a fixpoint of the centers") {
  const auto vectors = sample_mixture(23, 200);
  const ClusterResult r = kmeans_fixed_k(vectors, 3, KMeansOptions{});
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double own = 0;
    for (std::size_t x = 0; x < r.centers[0].size(); ++x) {
      const double diff = vectors[i].fractions[x] - r.centers[r.assignments[i]][x];
      own += diff * diff;
    }
    for (int c = 0; c < r.k; ++c) {
      double d = 0;
      for (std::size_t x = 0; x < r.centers[0].size(); ++x) {
        const double diff = vectors[i].fractions[x] - r.centers[c][x];
        d += diff * diff;
      }
      CHECK(own <= d + 1e-12);
    }
  }
}

TEST_CASE("serial and parallel k-means agree") {
  const auto vectors = sample_mixture(29, 300);
  KMeansOptions opts;
  opts.restarts = 8;
  opts.seed = 2;
  const auto a = kmeans_fixed_k(vectors, 3, opts);
  const auto b = kmeans_fixed_k_serial(vectors, 3, opts);
  CHECK(a.objective == b.objective);
  CHECK(a.assignments == b.assignments);
}

TEST_CASE("prevalence: worked examples") {
  // Month 2024-03: 10 fake of 1000 stars; 2 spiking campaign repos among 8
  // popular ones.
  std::vector<testutil::Ev> events;
  int uid = 0;
  const auto stars_on = [&](const std::string& repo, const char* when, int n) {
    const UtcSeconds base = ts(when);
    for (int i = 0; i < n; ++i) {
      events.push_back({"u" + std::to_string(uid++), repo, "WatchEvent", base + i * 60});
    }
  };
  for (int r = 0; r < 8; ++r) stars_on("o/pop" + std::to_string(r), "2024-03-02T00:00:00Z", 120);
  stars_on("o/filler", "2024-03-20T00:00:00Z", 40);  // below the popularity bar
  const auto store = testutil::make_store(kYear, events);
  REQUIRE(store.stars().size() == 1000);

  campaigns::FakeStarLedger ledger;
  for (int i = 0; i < 10; ++i) {
    ledger.entries.push_back(campaigns::LedgerEntry{
        static_cast<std::uint32_t>(i), *store.find_repo("o/pop0"), ts("2024-03-02T00:10:00Z"),
        campaigns::kLockstep});
  }
  std::vector<campaigns::CampaignReport> reports(2);
  reports[0].repo = *store.find_repo("o/pop0");
  reports[0].spike_months = {MonthKey{2024, 3}};
  reports[1].repo = *store.find_repo("o/pop1");
  reports[1].spike_months = {MonthKey{2024, 3}};

  const auto rows = prevalence_series(store, ledger, reports, 50);
  const auto march = std::find_if(rows.begin(), rows.end(), [](const PrevalenceRow& r) {
    return r.month == MonthKey{2024, 3};
  });
  REQUIRE(march != rows.end());
  CHECK(*march->pct_fake_stars() == doctest::Approx(1.0));
  CHECK(march->popular_repos == 8);
  CHECK(march->spiking_campaign_repos == 2);
  CHECK(*march->pct_campaign_repos() == doctest::Approx(25.0));

  // Empty months report absent percentages.
  const auto january = rows.front();
  CHECK(january.month == MonthKey{2024, 1});
  CHECK_FALSE(january.pct_fake_stars().has_value());
}

TEST_CASE("prevalence fixture hits 16.66% popular-repo share") {
  // 833 spiking campaign repos among exactly 5000 popular repos in one month.
  std::vector<testutil::Ev> events;
  int uid = 0;
  const UtcSeconds base = ts("2024-07-03T00:00:00Z");
  std::vector<campaigns::CampaignReport> reports;
  for (int r = 0; r < 5000; ++r) {
    const bool campaign = r < 833;
    const std::string repo = (campaign ? "c/spike" : "o/pop") + std::to_string(r);
    const int stars = campaign ? 51 : 50;
    for (int i = 0; i < stars; ++i) {
      events.push_back({"u" + std::to_string(uid++), repo, "WatchEvent", base + i});
    }
  }
  const auto store = testutil::make_store(kYear, events);
  for (int r = 0; r < 833; ++r) {
    campaigns::CampaignReport report;
    report.repo = *store.find_repo("c/spike" + std::to_string(r));
    report.spike_months = {MonthKey{2024, 7}};
    reports.push_back(std::move(report));
  }
  const campaigns::FakeStarLedger empty_ledger;
  const auto rows = prevalence_series(store, empty_ledger, reports, 50);
  const auto july = std::find_if(rows.begin(), rows.end(), [](const PrevalenceRow& r) {
    return r.month == MonthKey{2024, 7};
  });
  REQUIRE(july != rows.end());
  CHECK(july->popular_repos == 5000);
  CHECK(july->spiking_campaign_repos == 833);
  CHECK(*july->pct_campaign_repos() == doctest::Approx(16.66).epsilon(1e-12));
}

TEST_CASE("prevalence percentages recompute from their raw counts") {
  const auto store = testutil::random_store(12, 50, 20, 2000, kYear, 0.3);
  campaigns::FakeStarLedger ledger;
  for (std::size_t i = 0; i < store.stars().size(); i += 7) {
    const auto& s = store.stars()[i];
    ledger.entries.push_back(campaigns::LedgerEntry{s.actor, s.repo, s.time, campaigns::kLockstep});
  }
  const auto rows = prevalence_series(store, ledger, {}, 5);
  for (const auto& r : rows) {
    if (r.total_stars > 0) {
      CHECK(*r.pct_fake_stars() ==
            doctest::Approx(100.0 * static_cast<double>(r.fake_stars) /
                            static_cast<double>(r.total_stars)));
    }
    if (r.active_accounts > 0) {
      CHECK(r.campaign_accounts_active <= r.active_accounts);
    }
  }
}

TEST_CASE("name token frequency: worked examples") {
  const std::vector<std::string> names = {"Adobe-Animate-Crack", "adobe-crack"};
  const auto counts = name_token_frequency(names);
  CHECK(counts.at("adobe") == 2);
  CHECK(counts.at("crack") == 2);
  CHECK(counts.at("animate") == 1);
  CHECK(counts.size() == 3);

  CHECK(name_token_frequency({}).empty());

  // Length-1 tokens are dropped, case is folded, digits stay.
  const auto more = name_token_frequency(std::vector<std::string>{"h4ck-X-2024"});
  CHECK(more.contains("h4ck"));
  CHECK(more.contains("2024"));
  CHECK_FALSE(more.contains("x"));
}

TEST_CASE("token table weighted like the published top words ranks bot/free/crack first") {
  std::vector<std::string> names;
  const auto repeat = [&](const char* token, int count) {
    for (int i = 0; i < count; ++i) names.push_back(std::string(token) + "-repo");
  };
  repeat("free", 856);
  repeat("crack", 721);
  repeat("bot", 1071);
  repeat("pro", 656);
  repeat("adobe", 618);
  repeat("hack", 357);
  const auto counts = name_token_frequency(names);
  CHECK(counts.at("free") == 856);
  CHECK(counts.at("crack") == 721);
  CHECK(counts.at("bot") == 1071);

  std::vector<std::pair<std::int64_t, std::string>> ranked;
  for (const auto& [token, count] : counts) {
    if (token != "repo") ranked.emplace_back(count, token);
  }
  std::sort(ranked.rbegin(), ranked.rend());
  REQUIRE(ranked.size() >= 3);
  CHECK(ranked[0].second == "bot");
  CHECK(ranked[1].second == "free");
  CHECK(ranked[2].second == "crack");
}
