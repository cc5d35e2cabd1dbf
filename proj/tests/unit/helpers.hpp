#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "starwatch/events.hpp"

namespace testutil {

inline starwatch::UtcSeconds ts(const char* iso) {
  const auto t = starwatch::parse_iso8601_utc(iso);
  if (!t) throw std::runtime_error(std::string("bad test timestamp: ") + iso);
  return *t;
}

inline starwatch::TimeWindow window(const char* start, const char* end) {
  return {ts(start), ts(end)};
}

struct Ev {
  std::string actor;
  std::string repo;
  std::string kind;
  starwatch::UtcSeconds time;
};

inline starwatch::events::EventStore make_store(starwatch::TimeWindow w,
                                                const std::vector<Ev>& events) {
  starwatch::events::EventStoreBuilder builder(w);
  for (const Ev& e : events) builder.add(e.actor, e.repo, e.kind, e.time);
  return std::move(builder).build();
}

// Random store of WatchEvents (plus optional other kinds) for property tests.
inline starwatch::events::EventStore random_store(std::uint64_t seed, int n_actors, int n_repos,
                                                  int n_events, starwatch::TimeWindow w,
                                                  double extra_kind_fraction = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> actor(0, n_actors - 1);
  std::uniform_int_distribution<int> repo(0, n_repos - 1);
  std::uniform_int_distribution<starwatch::UtcSeconds> time(w.start, w.end);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const char* kinds[] = {"PushEvent", "ForkEvent", "IssuesEvent", "CreateEvent"};
  std::uniform_int_distribution<std::size_t> kind(0, std::size(kinds) - 1);
  starwatch::events::EventStoreBuilder builder(w);
  for (int i = 0; i < n_events; ++i) {
    const char* k = coin(rng) < extra_kind_fraction ? kinds[kind(rng)] : "WatchEvent";
    builder.add("u" + std::to_string(actor(rng)), "o/r" + std::to_string(repo(rng)), k, time(rng));
  }
  return std::move(builder).build();
}

}  // namespace testutil
