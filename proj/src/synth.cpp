#include "starwatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_set>

namespace starwatch::synth {
namespace {

std::string tag(const char* prefix, std::int64_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%05lld", prefix, static_cast<long long>(i));
  return buf;
}

std::string repo_tag(std::int64_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "org%05lld/repo%05lld", static_cast<long long>(i),
                static_cast<long long>(i));
  return buf;
}

std::string campaign_repo_tag(std::size_t injection, std::int64_t i) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "campaign%02zu/repo%03lld", injection,
                static_cast<long long>(i));
  return buf;
}

void validate(const ScenarioConfig& c) {
  if (c.n_accounts < 0 || c.n_repos < 0) throw ValidationError("negative account or repo count");
  if (c.background_stars_per_day < 0) throw ValidationError("negative background rate");
  if (c.window.end < c.window.start) throw ValidationError("window ends before it starts");
  if (c.background_stars_per_day > 0 && (c.n_accounts == 0 || c.n_repos == 0)) {
    throw ValidationError("background traffic needs accounts and repos");
  }
  const double span_days =
      static_cast<double>(c.window.end - c.window.start) / static_cast<double>(kSecondsPerDay);
  for (const Injection& inj : c.injections) {
    if (inj.n_fake_accounts <= 0 || inj.n_target_repos <= 0 || inj.stars_per_repo <= 0) {
      throw ValidationError("injection counts must be positive");
    }
    if (inj.stars_per_repo > inj.n_fake_accounts) {
      throw ValidationError("stars_per_repo exceeds n_fake_accounts");
    }
    if (inj.burst_span_days < 0 || inj.burst_span_days > span_days) {
      throw ValidationError("burst span does not fit the window");
    }
    if (inj.delivery_span_days < inj.burst_span_days || inj.delivery_span_days > span_days) {
      throw ValidationError("delivery span must cover the burst and fit the window");
    }
    if (inj.organic_stars_per_repo < 0) throw ValidationError("negative organic star count");
    if (inj.organic_stars_per_repo > 0 && c.n_accounts == 0) {
      throw ValidationError("organic stars need background accounts");
    }
  }
  if (c.camouflage_stars_per_account > 0 && c.n_repos == 0) {
    throw ValidationError("camouflage needs background repos");
  }
}

constexpr const char* kExtraKinds[] = {"PushEvent",   "CreateEvent",      "IssuesEvent",
                                       "ForkEvent",   "PullRequestEvent", "IssueCommentEvent"};

}  // namespace

std::pair<events::EventStore, GroundTruth> generate(const ScenarioConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.rng_seed);
  events::EventStoreBuilder builder(config.window);
  GroundTruth truth;

  const double span_days = static_cast<double>(config.window.end - config.window.start) /
                           static_cast<double>(kSecondsPerDay);
  std::uniform_int_distribution<UtcSeconds> any_time(config.window.start, config.window.end);

  // Background stars: popularity-skewed repo choice, uniform actors and times.
  std::int64_t n_background = 0;
  std::vector<double> weights;
  if (config.background_stars_per_day > 0 && span_days > 0) {
    std::poisson_distribution<std::int64_t> total(config.background_stars_per_day * span_days);
    n_background = total(rng);
    weights.reserve(config.n_repos);
    for (std::int64_t r = 0; r < config.n_repos; ++r) {
      weights.push_back(std::pow(static_cast<double>(r + 1), -config.popularity_exponent));
    }
  }
  if (n_background > 0) {
    std::discrete_distribution<std::int64_t> pick_repo(weights.begin(), weights.end());
    std::uniform_int_distribution<std::int64_t> pick_actor(0, config.n_accounts - 1);
    for (std::int64_t i = 0; i < n_background; ++i) {
      builder.add(tag("acct", pick_actor(rng)), repo_tag(pick_repo(rng)), "WatchEvent",
                  any_time(rng));
    }
    if (config.extra_events_per_star > 0) {
      std::poisson_distribution<std::int64_t> extra_total(config.extra_events_per_star *
                                                          static_cast<double>(n_background));
      std::uniform_int_distribution<std::size_t> pick_kind(0, std::size(kExtraKinds) - 1);
      const std::int64_t n_extra = extra_total(rng);
      for (std::int64_t i = 0; i < n_extra; ++i) {
        builder.add(tag("acct", pick_actor(rng)), repo_tag(pick_repo(rng)),
                    kExtraKinds[pick_kind(rng)], any_time(rng));
      }
    }
  }

  // Injected campaigns.
  for (std::size_t inj_idx = 0; inj_idx < config.injections.size(); ++inj_idx) {
    const Injection& inj = config.injections[inj_idx];
    std::vector<std::string> accounts;
    accounts.reserve(inj.n_fake_accounts);
    for (std::int64_t a = 0; a < inj.n_fake_accounts; ++a) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "fake%02zu_%04lld", inj_idx, static_cast<long long>(a));
      accounts.emplace_back(buf);
    }
    truth.accounts.insert(truth.accounts.end(), accounts.begin(), accounts.end());

    const auto burst_span =
        static_cast<std::int64_t>(inj.burst_span_days * static_cast<double>(kSecondsPerDay));
    const auto delivery_span =
        static_cast<std::int64_t>(inj.delivery_span_days * static_cast<double>(kSecondsPerDay));
    std::uniform_int_distribution<UtcSeconds> anchor_at(config.window.start,
                                                        config.window.end - delivery_span);
    const UtcSeconds anchor = anchor_at(rng);
    std::uniform_int_distribution<UtcSeconds> burst_start_at(anchor,
                                                             anchor + delivery_span - burst_span);
    for (std::int64_t r = 0; r < inj.n_target_repos; ++r) {
      const std::string repo = campaign_repo_tag(inj_idx, r);
      truth.repos.push_back(repo);
      const UtcSeconds burst_start = burst_start_at(rng);
      std::uniform_int_distribution<UtcSeconds> star_time(burst_start, burst_start + burst_span);

      std::vector<std::uint32_t> chosen(accounts.size());
      for (std::uint32_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
      if (inj.stars_per_repo < inj.n_fake_accounts) {
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(inj.stars_per_repo);
        std::sort(chosen.begin(), chosen.end());
      }
      for (const std::uint32_t a : chosen) {
        const UtcSeconds t = star_time(rng);
        builder.add(accounts[a], repo, "WatchEvent", t);
        truth.stars.emplace_back(accounts[a], repo, t);
      }
      if (inj.organic_stars_per_repo > 0) {
        std::uniform_int_distribution<std::int64_t> pick_actor(0, config.n_accounts - 1);
        for (std::int64_t k = 0; k < inj.organic_stars_per_repo; ++k) {
          builder.add(tag("acct", pick_actor(rng)), repo, "WatchEvent", any_time(rng));
        }
      }
    }

    if (config.camouflage_stars_per_account > 0) {
      const std::int64_t top = std::max<std::int64_t>(config.n_repos / 10, 1);
      std::uniform_int_distribution<std::int64_t> pick_popular(0, top - 1);
      for (const std::string& account : accounts) {
        for (std::int64_t k = 0; k < config.camouflage_stars_per_account; ++k) {
          builder.add(account, repo_tag(pick_popular(rng)), "WatchEvent", any_time(rng));
        }
      }
    }
  }

  std::sort(truth.accounts.begin(), truth.accounts.end());
  std::sort(truth.repos.begin(), truth.repos.end());
  std::sort(truth.stars.begin(), truth.stars.end());
  return {std::move(builder).build(), std::move(truth)};
}

SetScore score_sets(std::span<const std::string> detected, std::span<const std::string> truth) {
  SetScore score;
  score.detected = static_cast<std::int64_t>(detected.size());
  score.truth = static_cast<std::int64_t>(truth.size());
  const std::unordered_set<std::string> truth_set(truth.begin(), truth.end());
  for (const std::string& d : detected) {
    if (truth_set.contains(d)) ++score.true_positive;
  }
  if (score.detected > 0) {
    score.precision = static_cast<double>(score.true_positive) / static_cast<double>(score.detected);
  }
  if (score.truth > 0) {
    score.recall = static_cast<double>(score.true_positive) / static_cast<double>(score.truth);
  }
  return score;
}

EvaluationReport evaluate_detection(
    std::span<const std::string> detected_repos, std::span<const std::string> detected_accounts,
    std::span<const std::pair<std::string, std::string>> detected_stars, const GroundTruth& truth) {
  EvaluationReport report;
  report.repos = score_sets(detected_repos, truth.repos);
  report.accounts = score_sets(detected_accounts, truth.accounts);

  const auto star_key = [](const std::string& actor, const std::string& repo) {
    return actor + '\x1f' + repo;
  };
  std::vector<std::string> detected_keys, truth_keys;
  detected_keys.reserve(detected_stars.size());
  for (const auto& [actor, repo] : detected_stars) detected_keys.push_back(star_key(actor, repo));
  truth_keys.reserve(truth.stars.size());
  for (const auto& [actor, repo, _] : truth.stars) truth_keys.push_back(star_key(actor, repo));
  report.stars = score_sets(detected_keys, truth_keys);
  return report;
}

}  // namespace starwatch::synth
