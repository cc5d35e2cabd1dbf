#include "doctest.h"

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "starwatch/events.hpp"

using namespace starwatch;
using namespace starwatch::events;
using testutil::ts;

namespace {

const TimeWindow kYear = testutil::window("2024-01-01T00:00:00Z", "2024-12-31T23:59:59Z");

std::string watch_line(const char* actor, const char* repo, const char* when) {
  std::string line = R"({"type":"WatchEvent","actor":{"login":")";
  line += actor;
  line += R"("},"repo":{"name":")";
  line += repo;
  line += R"("},"created_at":")";
  line += when;
  line += R"("})";
  return line;
}

}  // namespace

TEST_CASE("classify_event maps the documented kinds") {
  CHECK(classify_event("WatchEvent") == EventTypeClass::Star);
  CHECK(classify_event("PushEvent") == EventTypeClass::Push);
  CHECK(classify_event("ForkEvent") == EventTypeClass::Fork);
  CHECK(classify_event("CreateEvent") == EventTypeClass::Create);
  CHECK(classify_event("IssuesEvent") == EventTypeClass::Issue);
  CHECK(classify_event("PullRequestEvent") == EventTypeClass::PR);
  CHECK(classify_event("IssueCommentEvent") == EventTypeClass::Comment);
  CHECK(classify_event("CommitCommentEvent") == EventTypeClass::Comment);
  CHECK(classify_event("PullRequestReviewCommentEvent") == EventTypeClass::Comment);
  CHECK(classify_event("GollumEvent") == EventTypeClass::Other);
  CHECK(classify_event("") == EventTypeClass::Other);
}

TEST_CASE("classify_event is total over arbitrary strings") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(0, 24);
  std::uniform_int_distribution<int> ch('A', 'z');
  for (int i = 0; i < 500; ++i) {
    std::string kind;
    const int n = len(rng);
    for (int j = 0; j < n; ++j) kind.push_back(static_cast<char>(ch(rng)));
    const auto c = classify_event(kind);
    CHECK(static_cast<int>(c) >= 0);
    CHECK(static_cast<int>(c) < kEventTypeClassCount);
    CHECK(classify_event(kind) == c);
  }
}

TEST_CASE("parse_event_stream: three well-formed watch lines") {
  std::stringstream in;
  in << watch_line("alice", "o/x", "2024-03-01T10:00:00Z") << '\n'
     << watch_line("bob", "o/x", "2024-03-02T10:00:00Z") << '\n'
     << watch_line("carol", "o/y", "2024-03-03T10:00:00Z") << '\n';
  const EventStore store = parse_event_stream(in, kYear);
  CHECK(store.events().size() == 3);
  CHECK(store.stars().size() == 3);
  CHECK(store.malformed_count() == 0);
}

TEST_CASE("parse_event_stream: empty stream yields an empty store") {
  std::stringstream in;
  const EventStore store = parse_event_stream(in, kYear);
  CHECK(store.events().empty());
  CHECK(store.stars().empty());
}

TEST_CASE("parse_event_stream: malformed lines are counted, not fatal") {
  std::stringstream in;
  for (int i = 0; i < 8; ++i) {
    in << watch_line(("u" + std::to_string(i)).c_str(), "o/x", "2024-03-01T10:00:00Z") << '\n';
  }
  in << "this is not json\n";
  in << R"({"type":"WatchEvent","actor":{"login":"x"}})" << '\n';  // missing fields
  const EventStore store = parse_event_stream(in, kYear);
  CHECK(store.events().size() == 8);
  CHECK(store.malformed_count() == 2);
}

TEST_CASE("parse_event_stream: mostly-malformed input is rejected") {
  std::stringstream in;
  in << watch_line("a", "o/x", "2024-03-01T10:00:00Z") << '\n';
  in << "garbage 1\n"
     << "garbage 2\n"
     << "garbage 3\n";
  CHECK_THROWS_AS(parse_event_stream(in, kYear), CorruptInputError);
}

TEST_CASE("parse_event_file: missing file raises IoError") {
  CHECK_THROWS_AS(parse_event_file("/nonexistent/events.jsonl", kYear), IoError);
}

TEST_CASE("parse_event_file reads gzip-compressed archives") {
  const auto path = std::filesystem::temp_directory_path() / "starwatch_events_test.jsonl.gz";
  gzFile gz = gzopen(path.string().c_str(), "wb");
  REQUIRE(gz != nullptr);
  for (int i = 0; i < 5; ++i) {
    const std::string line =
        watch_line(("u" + std::to_string(i)).c_str(), "o/x", "2024-03-01T10:00:00Z") + "\n";
    gzwrite(gz, line.data(), static_cast<unsigned>(line.size()));
  }
  gzclose(gz);
  const EventStore store = parse_event_file(path, kYear);
  CHECK(store.events().size() == 5);
  std::filesystem::remove(path);
}

TEST_CASE("events outside the window are dropped, not malformed") {
  std::stringstream in;
  in << watch_line("a", "o/x", "2023-03-01T10:00:00Z") << '\n'   // before
     << watch_line("b", "o/x", "2024-03-01T10:00:00Z") << '\n'   // inside
     << watch_line("c", "o/x", "2025-03-01T10:00:00Z") << '\n';  // after
  const EventStore store = parse_event_stream(in, kYear);
  CHECK(store.events().size() == 1);
  CHECK(store.malformed_count() == 0);
}

TEST_CASE("round trip: serialize then reparse reproduces the store") {
  const EventStore store = testutil::random_store(42, 30, 12, 400, kYear, 0.3);
  std::stringstream buffer;
  write_event_stream(store, buffer);
  const EventStore again = parse_event_stream(buffer, kYear);
  CHECK(store == again);

  std::stringstream buffer2;
  write_event_stream(again, buffer2);
  CHECK(buffer.str() == buffer2.str());
}

TEST_CASE("star dedup keeps the earliest occurrence per pair") {
  const EventStore store = testutil::make_store(
      kYear, {{"a", "o/x", "WatchEvent", ts("2024-05-02T00:00:00Z")},
              {"a", "o/x", "WatchEvent", ts("2024-03-01T00:00:00Z")},
              {"a", "o/x", "WatchEvent", ts("2024-07-09T00:00:00Z")},
              {"b", "o/x", "WatchEvent", ts("2024-06-01T00:00:00Z")}});
  REQUIRE(store.stars().size() == 2);
  const StarEvent& first = store.stars()[0];
  CHECK(store.actor_name(first.actor) == "a");
  CHECK(first.time == ts("2024-03-01T00:00:00Z"));
}

TEST_CASE("star dedup property: every pair appears at most once") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const EventStore store = testutil::random_store(seed, 12, 5, 300, kYear);
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> pairs;
    for (const StarEvent& s : store.stars()) ++pairs[{s.actor, s.repo}];
    for (const auto& [_, count] : pairs) CHECK(count == 1);
  }
}

TEST_CASE("activity duration examples") {
  const EventStore store = testutil::make_store(
      kYear, {{"a", "o/x", "WatchEvent", ts("2024-02-01T00:00:00Z")},
              {"a", "o/y", "PushEvent", ts("2024-02-10T00:00:00Z")},
              {"b", "o/x", "WatchEvent", ts("2024-02-05T12:00:00Z")},
              {"c", "o/z", "WatchEvent", ts("2024-01-01T00:00:00Z")},
              {"c", "o/z", "ForkEvent", ts("2024-01-31T23:59:00Z")}});
  CHECK(actor_activity_duration_days(store, "a") == 9);
  CHECK(actor_activity_duration_days(store, "b") == 0);  // single event
  CHECK(actor_activity_duration_days(store, "c") == 30);
  CHECK(repo_activity_duration_days(store, "o/x") == 4);
  CHECK_THROWS_AS(actor_activity_duration_days(store, "nobody"), NotFoundError);
  CHECK_THROWS_AS(repo_activity_duration_days(store, "o/none"), NotFoundError);
}

TEST_CASE("monthly star counts") {
  std::vector<testutil::Ev> events;
  for (int i = 0; i < 3; ++i) {
    events.push_back({"u" + std::to_string(i), "o/x", "WatchEvent",
                      ts("2024-03-10T00:00:00Z") + i * kSecondsPerDay});
  }
  for (int i = 0; i < 2; ++i) {
    events.push_back({"v" + std::to_string(i), "o/x", "WatchEvent",
                      ts("2024-04-02T00:00:00Z") + i * kSecondsPerDay});
  }
  const EventStore store = testutil::make_store(kYear, events);
  const auto counts = monthly_star_counts(store, *store.find_repo("o/x"));
  REQUIRE(counts.size() == 2);
  CHECK(counts.at(MonthKey{2024, 3}) == 3);
  CHECK(counts.at(MonthKey{2024, 4}) == 2);

  const EventStore no_stars =
      testutil::make_store(kYear, {{"a", "o/q", "PushEvent", ts("2024-03-10T00:00:00Z")}});
  CHECK(monthly_star_counts(no_stars, *no_stars.find_repo("o/q")).empty());
}

TEST_CASE("monthly star counts: 100 uniform stars split across two months") {
  // Distinct actors so dedup keeps all 100 stars.
  std::mt19937_64 rng(7);
  const UtcSeconds start = ts("2024-01-15T00:00:00Z");
  const UtcSeconds end = ts("2024-02-14T23:59:59Z");
  std::uniform_int_distribution<UtcSeconds> when(start, end);
  std::vector<testutil::Ev> events;
  std::vector<UtcSeconds> times;
  for (int i = 0; i < 100; ++i) {
    const UtcSeconds t = when(rng);
    times.push_back(t);
    events.push_back({"u" + std::to_string(i), "o/x", "WatchEvent", t});
  }
  const EventStore store = testutil::make_store(kYear, events);
  const auto counts = monthly_star_counts(store, *store.find_repo("o/x"));

  // Brute-force month bucketing as the oracle.
  std::map<MonthKey, std::int64_t> expected;
  for (const UtcSeconds t : times) ++expected[month_of(t)];
  CHECK(counts == expected);
  std::int64_t total = 0;
  for (const auto& [_, c] : counts) total += c;
  CHECK(total == 100);
  CHECK(counts.size() == 2);
}

TEST_CASE("sum of monthly star counts equals the repo's star total") {
  const EventStore store = testutil::random_store(99, 25, 8, 600, kYear, 0.2);
  for (std::uint32_t repo = 0; repo < store.repo_count(); ++repo) {
    std::int64_t total = 0;
    for (const auto& [_, c] : monthly_star_counts(store, repo)) total += c;
    CHECK(total == static_cast<std::int64_t>(store.repo_stars(repo).size()));
  }
}

TEST_CASE("iso8601 parsing accepts fractional seconds and rejects junk") {
  CHECK(parse_iso8601_utc("2024-03-01T10:00:00Z").has_value());
  CHECK(parse_iso8601_utc("2024-03-01T10:00:00.123Z").has_value());
  CHECK(parse_iso8601_utc("2024-03-01T10:00:00.123Z") == parse_iso8601_utc("2024-03-01T10:00:00Z"));
  CHECK(parse_iso8601_utc("2024-03-01 10:00:00Z").has_value());
  CHECK_FALSE(parse_iso8601_utc("2024-03-01T10:00:00").has_value());
  CHECK_FALSE(parse_iso8601_utc("2024-13-01T10:00:00Z").has_value());
  CHECK_FALSE(parse_iso8601_utc("2024-02-30T10:00:00Z").has_value());
  CHECK_FALSE(parse_iso8601_utc("not a time").has_value());
  CHECK(format_iso8601_utc(*parse_iso8601_utc("2024-02-29T23:59:59Z")) == "2024-02-29T23:59:59Z");
}

TEST_CASE("calendar month arithmetic clamps the day") {
  const UtcSeconds jan31 = ts("2024-01-31T12:00:00Z");
  CHECK(format_iso8601_utc(add_calendar_months(jan31, 1)) == "2024-02-29T12:00:00Z");
  CHECK(format_iso8601_utc(add_calendar_months(jan31, 3)) == "2024-04-30T12:00:00Z");
  CHECK(format_iso8601_utc(add_calendar_months(jan31, 12)) == "2025-01-31T12:00:00Z");
  CHECK(format_iso8601_utc(add_calendar_months(jan31, -2)) == "2023-11-30T12:00:00Z");
}
