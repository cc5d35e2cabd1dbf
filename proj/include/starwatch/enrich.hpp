#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "starwatch/time.hpp"

namespace starwatch::enrich {

enum class Existence { Exists, Deleted, Unknown };

// Answers "does this entity still exist"; results are memoized per run and
// Unknown is never coerced into an answer.
class ExistenceProvider {
 public:
  virtual ~ExistenceProvider() = default;
  Existence resolve(const std::string& entity_id);

 private:
  virtual Existence lookup(const std::string& entity_id) = 0;

  std::mutex mu_;
  std::unordered_map<std::string, Existence> memo_;
};

// CSV with rows entity_id,status where status is "exists" or "deleted".
std::unordered_map<std::string, Existence> read_existence_csv(const std::string& path);

class FixtureExistenceProvider final : public ExistenceProvider {
 public:
  explicit FixtureExistenceProvider(std::unordered_map<std::string, Existence> table)
      : table_(std::move(table)) {}

 private:
  Existence lookup(const std::string& entity_id) override;
  std::unordered_map<std::string, Existence> table_;
};

enum class EntityKind { Repo, Account };

// Platform REST lookup; token read from the environment, exponential backoff
// on rate-limit responses. Never exercised by the test suite.
class LiveExistenceProvider final : public ExistenceProvider {
 public:
  struct Options {
    std::string host = "api.github.com";
    std::string token_env = "GITHUB_TOKEN";
    int max_attempts = 5;
  };
  LiveExistenceProvider(EntityKind kind, Options options);

 private:
  Existence lookup(const std::string& entity_id) override;
  EntityKind kind_;
  Options options_;
};

struct DeletionRatio {
  std::int64_t detected_deleted = 0, detected_resolved = 0, detected_unknown = 0;
  std::int64_t baseline_deleted = 0, baseline_resolved = 0, baseline_unknown = 0;
  std::optional<double> pct_deleted_detected;  // absent when nothing resolved
  std::optional<double> pct_deleted_baseline;
};

DeletionRatio deletion_ratio(std::span<const std::string> detected, ExistenceProvider& provider,
                             std::span<const std::string> baseline);

std::string normalize_repo_id(std::string_view id);  // "Owner/Name" -> "owner/name"

struct TrendingRow {
  std::string repo;
  MonthKey month;
};
struct PackageRow {
  std::string package;
  std::string registry;
  std::string repo;
};

struct TrendingMatches {
  std::vector<std::string> matched_repos;         // normalized, sorted
  std::map<MonthKey, std::int64_t> monthly;       // trending appearances of matches
};
TrendingMatches cross_reference_trending(std::span<const std::string> campaign_repos,
                                         std::span<const TrendingRow> table);

struct PackageMatches {
  std::vector<std::string> matched_repos;          // normalized, sorted
  std::vector<PackageRow> matched_packages;
  std::map<std::string, std::int64_t> per_registry;
};
PackageMatches cross_reference_packages(std::span<const std::string> campaign_repos,
                                        std::span<const PackageRow> table);

std::vector<TrendingRow> read_trending_csv(const std::string& path);
std::vector<PackageRow> read_packages_csv(const std::string& path);

}  // namespace starwatch::enrich
