#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "starwatch/enrich.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>
#include <unordered_set>

#include "httplib.h"
#include "starwatch/csv.hpp"
#include "starwatch/errors.hpp"

namespace starwatch::enrich {

Existence ExistenceProvider::resolve(const std::string& entity_id) {
  {
    std::lock_guard lock(mu_);
    if (const auto it = memo_.find(entity_id); it != memo_.end()) return it->second;
  }
  const Existence result = lookup(entity_id);  // outside the lock; callers may fan out
  std::lock_guard lock(mu_);
  return memo_.emplace(entity_id, result).first->second;
}

std::unordered_map<std::string, Existence> read_existence_csv(const std::string& path) {
  std::unordered_map<std::string, Existence> table;
  csv::for_each_row(path, "entity_id,", [&](const std::vector<std::string>& row) {
    if (row.size() != 2) throw CorruptInputError("bad existence fixture row in " + path);
    if (row[1] == "exists") {
      table[row[0]] = Existence::Exists;
    } else if (row[1] == "deleted") {
      table[row[0]] = Existence::Deleted;
    } else {
      throw CorruptInputError("bad status '" + row[1] + "' in " + path);
    }
  });
  return table;
}

Existence FixtureExistenceProvider::lookup(const std::string& entity_id) {
  const auto it = table_.find(entity_id);
  return it == table_.end() ? Existence::Unknown : it->second;
}

LiveExistenceProvider::LiveExistenceProvider(EntityKind kind, Options options)
    : kind_(kind), options_(std::move(options)) {}

Existence LiveExistenceProvider::lookup(const std::string& entity_id) {
  httplib::SSLClient client(options_.host);
  client.set_connection_timeout(10);
  client.set_read_timeout(10);
  httplib::Headers headers{{"User-Agent", "starwatch"}, {"Accept", "application/vnd.github+json"}};
  if (const char* token = std::getenv(options_.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const std::string path =
      (kind_ == EntityKind::Repo ? "/repos/" : "/users/") + entity_id;

  int backoff_seconds = 1;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    const httplib::Result res = client.Get(path, headers);
    if (!res) return Existence::Unknown;
    if (res->status == 200) return Existence::Exists;
    if (res->status == 404 || res->status == 451) return Existence::Deleted;
    if (res->status == 403 || res->status == 429) {
      std::this_thread::sleep_for(std::chrono::seconds(backoff_seconds));
      backoff_seconds = std::min(backoff_seconds * 2, 64);
      continue;
    }
    return Existence::Unknown;
  }
  return Existence::Unknown;
}

DeletionRatio deletion_ratio(std::span<const std::string> detected, ExistenceProvider& provider,
                             std::span<const std::string> baseline) {
  DeletionRatio out;
  const auto tally = [&](std::span<const std::string> entities, std::int64_t& deleted,
                         std::int64_t& resolved, std::int64_t& unknown) {
    const auto n = static_cast<std::int64_t>(entities.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : deleted, resolved, unknown)
    for (std::int64_t i = 0; i < n; ++i) {
      switch (provider.resolve(entities[i])) {
        case Existence::Deleted:
          ++deleted;
          ++resolved;
          break;
        case Existence::Exists:
          ++resolved;
          break;
        case Existence::Unknown:
          ++unknown;
          break;
      }
    }
  };
  tally(detected, out.detected_deleted, out.detected_resolved, out.detected_unknown);
  tally(baseline, out.baseline_deleted, out.baseline_resolved, out.baseline_unknown);
  if (out.detected_resolved > 0) {
    out.pct_deleted_detected =
        100.0 * static_cast<double>(out.detected_deleted) / static_cast<double>(out.detected_resolved);
  }
  if (out.baseline_resolved > 0) {
    out.pct_deleted_baseline =
        100.0 * static_cast<double>(out.baseline_deleted) / static_cast<double>(out.baseline_resolved);
  }
  return out;
}

std::string normalize_repo_id(std::string_view id) {
  std::string out(id);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

namespace {

std::unordered_set<std::string> normalized_set(std::span<const std::string> repos) {
  std::unordered_set<std::string> out;
  for (const std::string& r : repos) out.insert(normalize_repo_id(r));
  return out;
}

std::vector<std::string> sorted(std::unordered_set<std::string>&& set) {
  std::vector<std::string> out(set.begin(), set.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TrendingMatches cross_reference_trending(std::span<const std::string> campaign_repos,
                                         std::span<const TrendingRow> table) {
  const auto campaigns = normalized_set(campaign_repos);
  TrendingMatches out;
  std::unordered_set<std::string> matched;
  for (const TrendingRow& row : table) {
    const std::string repo = normalize_repo_id(row.repo);
    if (!campaigns.contains(repo)) continue;
    matched.insert(repo);
    ++out.monthly[row.month];
  }
  out.matched_repos = sorted(std::move(matched));
  return out;
}

PackageMatches cross_reference_packages(std::span<const std::string> campaign_repos,
                                        std::span<const PackageRow> table) {
  const auto campaigns = normalized_set(campaign_repos);
  PackageMatches out;
  std::unordered_set<std::string> matched;
  for (const PackageRow& row : table) {
    const std::string repo = normalize_repo_id(row.repo);
    if (!campaigns.contains(repo)) continue;
    matched.insert(repo);
    out.matched_packages.push_back(PackageRow{row.package, row.registry, repo});
    ++out.per_registry[row.registry];
  }
  out.matched_repos = sorted(std::move(matched));
  return out;
}

std::vector<TrendingRow> read_trending_csv(const std::string& path) {
  std::vector<TrendingRow> rows;
  csv::for_each_row(path, "repo_id,", [&](const std::vector<std::string>& row) {
    if (row.size() != 2) throw CorruptInputError("bad trending row in " + path);
    const auto month = parse_month_key(row[1]);
    if (!month) throw CorruptInputError("bad month '" + row[1] + "' in " + path);
    rows.push_back(TrendingRow{row[0], *month});
  });
  return rows;
}

std::vector<PackageRow> read_packages_csv(const std::string& path) {
  std::vector<PackageRow> rows;
  csv::for_each_row(path, "package,", [&](const std::vector<std::string>& row) {
    if (row.size() != 3) throw CorruptInputError("bad package row in " + path);
    rows.push_back(PackageRow{row[0], row[1], row[2]});
  });
  return rows;
}

}  // namespace starwatch::enrich
