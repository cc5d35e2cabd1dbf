#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace starwatch {

// Seconds since the Unix epoch, always UTC.
using UtcSeconds = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct CivilDateTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

// Accepts "YYYY-MM-DDTHH:MM:SSZ" with an optional fractional-second part
// (ignored). Returns nothing on any other shape.
std::optional<UtcSeconds> parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(UtcSeconds t);

CivilDateTime civil_from_epoch(UtcSeconds t);
UtcSeconds epoch_from_civil(const CivilDateTime& c);

// Calendar-month shift; the day of month is clamped to the target month's
// length (Jan 31 + 1 month -> Feb 28/29).
UtcSeconds add_calendar_months(UtcSeconds t, int months);

// UTC day number since the epoch; used for "same day" checks.
inline std::int64_t day_index(UtcSeconds t) {
  return t >= 0 ? t / kSecondsPerDay : (t - kSecondsPerDay + 1) / kSecondsPerDay;
}

// A UTC calendar month.
struct MonthKey {
  int year = 1970;
  int month = 1;  // 1..12

  auto operator<=>(const MonthKey&) const = default;

  // Months since year 0; convenient for lag arithmetic.
  std::int64_t index() const { return static_cast<std::int64_t>(year) * 12 + (month - 1); }
  static MonthKey from_index(std::int64_t idx);
};

MonthKey month_of(UtcSeconds t);
std::string to_string(MonthKey m);                       // "2024-03"
std::optional<MonthKey> parse_month_key(std::string_view);

// Closed interval [start, end].
struct TimeWindow {
  UtcSeconds start = 0;
  UtcSeconds end = 0;

  bool contains(UtcSeconds t) const { return t >= start && t <= end; }
  auto operator<=>(const TimeWindow&) const = default;
};

}  // namespace starwatch
