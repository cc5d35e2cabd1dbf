#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "starwatch/events.hpp"

namespace starwatch::synth {

// One planted campaign: fresh accounts delivering stars_per_repo stars to
// each of n_target_repos fresh repositories. The campaign anchors at a random
// instant; every repo's burst starts within delivery_span_days of the anchor
// and lasts burst_span_days. organic_stars_per_repo adds genuine stars from
// random background accounts spread over the whole window (not part of the
// ground truth).
struct Injection {
  std::int64_t n_fake_accounts = 0;
  std::int64_t n_target_repos = 0;
  double burst_span_days = 5.0;
  std::int64_t stars_per_repo = 0;
  std::int64_t organic_stars_per_repo = 0;
  double delivery_span_days = 60.0;
};

struct ScenarioConfig {
  std::int64_t n_accounts = 0;
  std::int64_t n_repos = 0;
  double background_stars_per_day = 0.0;
  // Repo popularity weight (rank+1)^-exponent; an explicit modeling choice,
  // there is no ground-truth background model.
  double popularity_exponent = 1.5;
  TimeWindow window;
  std::vector<Injection> injections;
  std::uint64_t rng_seed = 0;
  // Adversarial noise: each fake account also stars this many popular
  // background repos (not part of the ground truth).
  std::int64_t camouflage_stars_per_account = 0;
  // Non-star background events per background star, so accounts have
  // ordinary activity besides starring.
  double extra_events_per_star = 0.0;
};

struct GroundTruth {
  std::vector<std::string> accounts;  // sorted
  std::vector<std::string> repos;     // sorted
  std::vector<std::tuple<std::string, std::string, UtcSeconds>> stars;  // sorted
};

// Deterministic in rng_seed; throws ValidationError on infeasible configs.
std::pair<events::EventStore, GroundTruth> generate(const ScenarioConfig& config);

struct SetScore {
  std::int64_t true_positive = 0;
  std::int64_t detected = 0;
  std::int64_t truth = 0;
  std::optional<double> precision;  // absent when nothing was detected
  std::optional<double> recall;     // absent when the truth set is empty
};

SetScore score_sets(std::span<const std::string> detected, std::span<const std::string> truth);

struct EvaluationReport {
  SetScore repos;
  SetScore accounts;
  SetScore stars;
};

// Stars are matched on (actor, repo); the edge time is determined by the pair.
EvaluationReport evaluate_detection(
    std::span<const std::string> detected_repos, std::span<const std::string> detected_accounts,
    std::span<const std::pair<std::string, std::string>> detected_stars, const GroundTruth& truth);

}  // namespace starwatch::synth
