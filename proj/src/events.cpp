#include "starwatch/events.hpp"

#include <zlib.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <tuple>
#include <unordered_set>

#include "json.hpp"

namespace starwatch::events {

EventTypeClass classify_event(std::string_view event_kind) {
  if (event_kind == "WatchEvent") return EventTypeClass::Star;
  if (event_kind == "PushEvent") return EventTypeClass::Push;
  if (event_kind == "ForkEvent") return EventTypeClass::Fork;
  if (event_kind == "CreateEvent") return EventTypeClass::Create;
  if (event_kind == "IssuesEvent") return EventTypeClass::Issue;
  if (event_kind == "PullRequestEvent") return EventTypeClass::PR;
  if (event_kind == "IssueCommentEvent" || event_kind == "CommitCommentEvent" ||
      event_kind == "PullRequestReviewCommentEvent") {
    return EventTypeClass::Comment;
  }
  return EventTypeClass::Other;
}

std::string_view to_string(EventTypeClass c) {
  switch (c) {
    case EventTypeClass::Star: return "Star";
    case EventTypeClass::Push: return "Push";
    case EventTypeClass::Fork: return "Fork";
    case EventTypeClass::Create: return "Create";
    case EventTypeClass::Issue: return "Issue";
    case EventTypeClass::PR: return "PR";
    case EventTypeClass::Comment: return "Comment";
    case EventTypeClass::Other: return "Other";
  }
  return "Other";
}

std::uint32_t Interner::intern(std::string_view name) {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Interner::find(std::string_view name) const {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  return std::nullopt;
}

namespace {

std::span<const std::uint32_t> slice(const std::vector<std::uint32_t>& index,
                                     const std::vector<std::uint32_t>& offsets, std::uint32_t id) {
  return std::span<const std::uint32_t>(index).subspan(offsets[id], offsets[id + 1] - offsets[id]);
}

// Counting sort of `keys` (values < n_keys) into an index/offset pair.
void build_index(std::size_t n_keys, const std::vector<std::uint32_t>& keys,
                 std::vector<std::uint32_t>& index, std::vector<std::uint32_t>& offsets) {
  offsets.assign(n_keys + 1, 0);
  for (const auto k : keys) ++offsets[k + 1];
  for (std::size_t i = 1; i <= n_keys; ++i) offsets[i] += offsets[i - 1];
  index.resize(keys.size());
  std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::uint32_t i = 0; i < keys.size(); ++i) index[cursor[keys[i]]++] = i;
}

}  // namespace

std::span<const std::uint32_t> EventStore::actor_events(std::uint32_t actor) const {
  return slice(actor_event_index_, actor_event_offsets_, actor);
}
std::span<const std::uint32_t> EventStore::repo_events(std::uint32_t repo) const {
  return slice(repo_event_index_, repo_event_offsets_, repo);
}
std::span<const std::uint32_t> EventStore::actor_stars(std::uint32_t actor) const {
  return slice(actor_star_index_, actor_star_offsets_, actor);
}
std::span<const std::uint32_t> EventStore::repo_stars(std::uint32_t repo) const {
  return slice(repo_star_index_, repo_star_offsets_, repo);
}

bool EventStore::operator==(const EventStore& other) const {
  if (window_ != other.window_ || events_.size() != other.events_.size()) return false;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const RawEvent& a = events_[i];
    const RawEvent& b = other.events_[i];
    if (a.time != b.time || actor_name(a.actor) != other.actor_name(b.actor) ||
        repo_name(a.repo) != other.repo_name(b.repo) ||
        kind_name(a.kind) != other.kind_name(b.kind)) {
      return false;
    }
  }
  return true;
}

void EventStoreBuilder::add(std::string_view actor, std::string_view repo, std::string_view kind,
                            UtcSeconds time) {
  if (!window_.contains(time)) return;
  events_.push_back(Pending{time, std::string(actor), std::string(repo), std::string(kind)});
}

EventStore EventStoreBuilder::build() && {
  std::sort(events_.begin(), events_.end(), [](const Pending& a, const Pending& b) {
    return std::tie(a.time, a.actor, a.repo, a.kind) < std::tie(b.time, b.actor, b.repo, b.kind);
  });

  EventStore store;
  store.window_ = window_;
  store.malformed_ = malformed_;
  store.events_.reserve(events_.size());
  for (const Pending& p : events_) {
    RawEvent ev;
    ev.time = p.time;
    ev.actor = store.actors_.intern(p.actor);
    ev.repo = store.repos_.intern(p.repo);
    ev.kind = store.kinds_.intern(p.kind);
    store.events_.push_back(ev);
  }
  events_.clear();

  // Stars: first occurrence per (actor, repo). Events are time-sorted, so the
  // first hit is the earliest.
  std::unordered_set<std::uint64_t> seen;
  const auto watch = store.kinds_.find("WatchEvent");
  if (watch) {
    for (const RawEvent& ev : store.events_) {
      if (ev.kind != *watch) continue;
      const std::uint64_t key = (static_cast<std::uint64_t>(ev.actor) << 32) | ev.repo;
      if (seen.insert(key).second) store.stars_.push_back(StarEvent{ev.time, ev.actor, ev.repo});
    }
  }

  std::vector<std::uint32_t> keys(store.events_.size());
  for (std::uint32_t i = 0; i < store.events_.size(); ++i) keys[i] = store.events_[i].actor;
  build_index(store.actors_.size(), keys, store.actor_event_index_, store.actor_event_offsets_);
  for (std::uint32_t i = 0; i < store.events_.size(); ++i) keys[i] = store.events_[i].repo;
  build_index(store.repos_.size(), keys, store.repo_event_index_, store.repo_event_offsets_);

  keys.resize(store.stars_.size());
  for (std::uint32_t i = 0; i < store.stars_.size(); ++i) keys[i] = store.stars_[i].actor;
  build_index(store.actors_.size(), keys, store.actor_star_index_, store.actor_star_offsets_);
  for (std::uint32_t i = 0; i < store.stars_.size(); ++i) keys[i] = store.stars_[i].repo;
  build_index(store.repos_.size(), keys, store.repo_star_index_, store.repo_star_offsets_);

  return store;
}

namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

const nlohmann::json* field(const nlohmann::json& j, const char* object_key, const char* sub_key,
                            const char* flat_key) {
  if (auto it = j.find(object_key); it != j.end()) {
    if (it->is_object()) {
      if (auto sub = it->find(sub_key); sub != it->end() && sub->is_string()) return &*sub;
      return nullptr;
    }
    if (it->is_string()) return &*it;
  }
  if (auto it = j.find(flat_key); it != j.end() && it->is_string()) return &*it;
  return nullptr;
}

// Returns false when the line is not a usable event record.
bool parse_line(const std::string& line, EventStoreBuilder& builder) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) return false;
  const auto kind = j.find("type");
  if (kind == j.end() || !kind->is_string()) return false;
  const nlohmann::json* actor = field(j, "actor", "login", "actor.login");
  const nlohmann::json* repo = field(j, "repo", "name", "repo.name");
  const auto created = j.find("created_at");
  if (!actor || !repo || created == j.end() || !created->is_string()) return false;
  const auto time = parse_iso8601_utc(created->get_ref<const std::string&>());
  if (!time) return false;
  const auto& actor_name = actor->get_ref<const std::string&>();
  const auto& repo_name = repo->get_ref<const std::string&>();
  if (actor_name.empty() || repo_name.empty()) return false;
  builder.add(actor_name, repo_name, kind->get_ref<const std::string&>(), *time);
  return true;
}

EventStore finish_parse(EventStoreBuilder&& builder, std::size_t candidates, std::size_t malformed) {
  if (candidates > 0 && malformed * 2 > candidates) {
    throw CorruptInputError("more than half of the input lines are malformed (" +
                            std::to_string(malformed) + " of " + std::to_string(candidates) + ")");
  }
  return std::move(builder).build();
}

}  // namespace

EventStore parse_event_stream(std::istream& in, TimeWindow window) {
  if (!in) throw IoError("unreadable event stream");
  EventStoreBuilder builder(window);
  std::string line;
  std::size_t candidates = 0, malformed = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || is_blank(line)) continue;
    ++candidates;
    if (!parse_line(line, builder)) {
      ++malformed;
      builder.note_malformed();
    }
  }
  if (in.bad()) throw IoError("I/O failure while reading event stream");
  return finish_parse(std::move(builder), candidates, malformed);
}

EventStore parse_event_file(const std::filesystem::path& path, TimeWindow window) {
  // gzread handles both gzip-compressed and plain files.
  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (gz == nullptr) throw IoError("cannot open " + path.string());
  EventStoreBuilder builder(window);
  std::string pending;
  std::size_t candidates = 0, malformed = 0;
  char buf[1 << 16];
  const auto consume = [&](std::string&& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || is_blank(line)) return;
    ++candidates;
    if (!parse_line(line, builder)) {
      ++malformed;
      builder.note_malformed();
    }
  };
  int n = 0;
  while ((n = gzread(gz, buf, sizeof(buf))) > 0) {
    std::size_t begin = 0;
    for (int i = 0; i < n; ++i) {
      if (buf[i] != '\n') continue;
      pending.append(buf + begin, buf + i);
      begin = static_cast<std::size_t>(i) + 1;
      consume(std::move(pending));
      pending.clear();
    }
    pending.append(buf + begin, buf + n);
  }
  if (n < 0) {
    gzclose(gz);
    throw IoError("read failure on " + path.string());
  }
  gzclose(gz);
  if (!pending.empty()) consume(std::move(pending));
  return finish_parse(std::move(builder), candidates, malformed);
}

void write_event_stream(const EventStore& store, std::ostream& out) {
  for (const RawEvent& ev : store.events()) {
    nlohmann::json j;
    j["type"] = store.kind_name(ev.kind);
    j["actor"]["login"] = store.actor_name(ev.actor);
    j["repo"]["name"] = store.repo_name(ev.repo);
    j["created_at"] = format_iso8601_utc(ev.time);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing event stream");
}

namespace {

std::int64_t duration_days(const EventStore& store, std::span<const std::uint32_t> idx) {
  const UtcSeconds first = store.events()[idx.front()].time;
  const UtcSeconds last = store.events()[idx.back()].time;
  return (last - first) / kSecondsPerDay;
}

}  // namespace

std::int64_t actor_activity_duration_days(const EventStore& store, std::uint32_t actor) {
  return duration_days(store, store.actor_events(actor));
}

std::int64_t repo_activity_duration_days(const EventStore& store, std::uint32_t repo) {
  return duration_days(store, store.repo_events(repo));
}

std::int64_t actor_activity_duration_days(const EventStore& store, std::string_view actor) {
  const auto id = store.find_actor(actor);
  if (!id) throw NotFoundError("unknown account: " + std::string(actor));
  return actor_activity_duration_days(store, *id);
}

std::int64_t repo_activity_duration_days(const EventStore& store, std::string_view repo) {
  const auto id = store.find_repo(repo);
  if (!id) throw NotFoundError("unknown repository: " + std::string(repo));
  return repo_activity_duration_days(store, *id);
}

std::map<MonthKey, std::int64_t> monthly_star_counts(const EventStore& store, std::uint32_t repo) {
  std::map<MonthKey, std::int64_t> counts;
  for (const auto idx : store.repo_stars(repo)) ++counts[month_of(store.stars()[idx].time)];
  return counts;
}

}  // namespace starwatch::events
