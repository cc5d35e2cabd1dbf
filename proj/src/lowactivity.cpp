#include "starwatch/lowactivity.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace starwatch::lowactivity {
namespace {

std::optional<LowActivityFlag> check_account(const events::EventStore& store, std::uint32_t actor,
                                             std::uint32_t watch_kind) {
  const auto history = store.actor_events(actor);
  if (history.empty() || history.size() > 2) return std::nullopt;

  const events::RawEvent* star = nullptr;
  const events::RawEvent* extra = nullptr;
  for (const auto idx : history) {
    const events::RawEvent& ev = store.events()[idx];
    if (ev.kind == watch_kind) {
      if (star != nullptr) return std::nullopt;  // more than one star
      star = &ev;
    } else {
      extra = &ev;
    }
  }
  if (star == nullptr) return std::nullopt;
  if (extra != nullptr) {
    if (extra->repo != star->repo) return std::nullopt;
    if (day_index(extra->time) != day_index(star->time)) return std::nullopt;
  }

  LowActivityFlag flag;
  flag.actor = actor;
  flag.repo = star->repo;
  flag.star_time = star->time;
  if (extra != nullptr) flag.extra_kind = extra->kind;
  return flag;
}

}  // namespace

std::vector<LowActivityFlag> detect_low_activity_serial(const events::EventStore& store) {
  std::vector<LowActivityFlag> flags;
  const auto watch = store.find_kind("WatchEvent");
  if (!watch) return flags;
  for (std::uint32_t actor = 0; actor < store.actor_count(); ++actor) {
    if (auto flag = check_account(store, actor, *watch)) flags.push_back(*flag);
  }
  return flags;
}

std::vector<LowActivityFlag> detect_low_activity(const events::EventStore& store) {
  const auto watch = store.find_kind("WatchEvent");
  if (!watch) return {};
  const auto n = static_cast<std::int64_t>(store.actor_count());
  std::vector<std::optional<LowActivityFlag>> slots(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t actor = 0; actor < n; ++actor) {
    slots[actor] = check_account(store, static_cast<std::uint32_t>(actor), *watch);
  }
  std::vector<LowActivityFlag> flags;
  for (const auto& slot : slots) {
    if (slot) flags.push_back(*slot);
  }
  return flags;
}

std::vector<LowActivityFlag> filter_by_repo_threshold(std::vector<LowActivityFlag> flags,
                                                      std::int64_t min_fake) {
  if (min_fake < 1) throw std::invalid_argument("min_fake must be >= 1");
  std::unordered_map<std::uint32_t, std::int64_t> per_repo;
  for (const LowActivityFlag& f : flags) ++per_repo[f.repo];
  std::erase_if(flags, [&](const LowActivityFlag& f) { return per_repo[f.repo] < min_fake; });
  return flags;
}

void write_flags_csv(const events::EventStore& store, std::span<const LowActivityFlag> flags,
                     std::ostream& out) {
  out << "actor_id,repo_id,star_time,extra_event_kind\n";
  for (const LowActivityFlag& f : flags) {
    out << store.actor_name(f.actor) << ',' << store.repo_name(f.repo) << ','
        << format_iso8601_utc(f.star_time) << ','
        << (f.extra_kind ? store.kind_name(*f.extra_kind) : "") << '\n';
  }
}

}  // namespace starwatch::lowactivity
