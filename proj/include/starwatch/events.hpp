#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "starwatch/errors.hpp"
#include "starwatch/time.hpp"

namespace starwatch::events {

// The eight activity classes every platform event kind maps into.
enum class EventTypeClass : std::uint8_t { Star, Push, Fork, Create, Issue, PR, Comment, Other };
inline constexpr int kEventTypeClassCount = 8;

EventTypeClass classify_event(std::string_view event_kind);
std::string_view to_string(EventTypeClass c);

// String table assigning dense ids in first-appearance order.
class Interner {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::size_t size() const { return names_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> ids_;
};

struct RawEvent {
  UtcSeconds time = 0;
  std::uint32_t actor = 0;
  std::uint32_t repo = 0;
  std::uint32_t kind = 0;
};

// One retained star edge: at most one per (actor, repo), earliest occurrence.
struct StarEvent {
  UtcSeconds time = 0;
  std::uint32_t actor = 0;
  std::uint32_t repo = 0;
};

// Immutable, time-ordered event set with per-actor and per-repo indices.
// Safe for concurrent reads once built.
class EventStore {
 public:
  const TimeWindow& window() const { return window_; }
  const std::vector<RawEvent>& events() const { return events_; }
  const std::vector<StarEvent>& stars() const { return stars_; }
  std::size_t malformed_count() const { return malformed_; }

  std::size_t actor_count() const { return actors_.size(); }
  std::size_t repo_count() const { return repos_.size(); }
  const std::string& actor_name(std::uint32_t id) const { return actors_.name(id); }
  const std::string& repo_name(std::uint32_t id) const { return repos_.name(id); }
  const std::string& kind_name(std::uint32_t id) const { return kinds_.name(id); }
  std::optional<std::uint32_t> find_actor(std::string_view name) const { return actors_.find(name); }
  std::optional<std::uint32_t> find_repo(std::string_view name) const { return repos_.find(name); }
  std::optional<std::uint32_t> find_kind(std::string_view name) const { return kinds_.find(name); }

  // Indices into events(), ascending in time.
  std::span<const std::uint32_t> actor_events(std::uint32_t actor) const;
  std::span<const std::uint32_t> repo_events(std::uint32_t repo) const;
  // Indices into stars(), ascending in time.
  std::span<const std::uint32_t> actor_stars(std::uint32_t actor) const;
  std::span<const std::uint32_t> repo_stars(std::uint32_t repo) const;

  // Logical equality: same window and same (time, actor, repo, kind) sequence.
  bool operator==(const EventStore& other) const;

 private:
  friend class EventStoreBuilder;

  TimeWindow window_;
  std::vector<RawEvent> events_;
  std::vector<StarEvent> stars_;
  std::size_t malformed_ = 0;
  Interner actors_, repos_, kinds_;
  std::vector<std::uint32_t> actor_event_index_, actor_event_offsets_;
  std::vector<std::uint32_t> repo_event_index_, repo_event_offsets_;
  std::vector<std::uint32_t> actor_star_index_, actor_star_offsets_;
  std::vector<std::uint32_t> repo_star_index_, repo_star_offsets_;
};

class EventStoreBuilder {
 public:
  explicit EventStoreBuilder(TimeWindow window) : window_(window) {}

  // Events outside the window are dropped.
  void add(std::string_view actor, std::string_view repo, std::string_view kind, UtcSeconds time);
  void note_malformed(std::size_t n = 1) { malformed_ += n; }
  std::size_t event_count() const { return events_.size(); }

  // Sorts events into canonical order (time, actor, repo, kind by name),
  // re-interns ids in that order, dedups stars, builds indices.
  EventStore build() &&;

 private:
  struct Pending {
    UtcSeconds time;
    std::string actor, repo, kind;
  };
  TimeWindow window_;
  std::vector<Pending> events_;
  std::size_t malformed_ = 0;
};

// Newline-delimited JSON records with fields `type`, `actor.login`,
// `repo.name`, `created_at`. Malformed lines are counted and skipped;
// more than 50% malformed raises CorruptInputError.
EventStore parse_event_stream(std::istream& in, TimeWindow window);

// Same as above reading from a file, transparently gunzipping if needed.
EventStore parse_event_file(const std::filesystem::path& path, TimeWindow window);

// Canonical serialization; parse(write(store)) == store.
void write_event_stream(const EventStore& store, std::ostream& out);

// Whole days between the subject's first and last event (0 for one event).
std::int64_t actor_activity_duration_days(const EventStore& store, std::uint32_t actor);
std::int64_t repo_activity_duration_days(const EventStore& store, std::uint32_t repo);
// Name-based variants; throw NotFoundError for unknown subjects.
std::int64_t actor_activity_duration_days(const EventStore& store, std::string_view actor);
std::int64_t repo_activity_duration_days(const EventStore& store, std::string_view repo);

// Star counts per UTC calendar month; zero months absent.
std::map<MonthKey, std::int64_t> monthly_star_counts(const EventStore& store, std::uint32_t repo);

}  // namespace starwatch::events
