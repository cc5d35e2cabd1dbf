#include "starwatch/time.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace starwatch {
namespace {

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = static_cast<int>(y - era * 400);
  const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int doe = static_cast<int>(z - era * 146097);
  const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = yoe + era * 400;
  const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

bool read_digits(std::string_view s, std::size_t pos, int count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (int i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<UtcSeconds> parse_iso8601_utc(std::string_view text) {
  CivilDateTime c;
  if (!read_digits(text, 0, 4, c.year)) return std::nullopt;
  if (text.size() < 20 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  if (text[13] != ':' || text[16] != ':') return std::nullopt;
  if (!read_digits(text, 5, 2, c.month) || !read_digits(text, 8, 2, c.day) ||
      !read_digits(text, 11, 2, c.hour) || !read_digits(text, 14, 2, c.minute) ||
      !read_digits(text, 17, 2, c.second)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t before = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == before) return std::nullopt;
  }
  if (pos + 1 != text.size() || text[pos] != 'Z') return std::nullopt;
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > days_in_month(c.year, c.month)) return std::nullopt;
  if (c.hour > 23 || c.minute > 59 || c.second > 60) return std::nullopt;
  return epoch_from_civil(c);
}

std::string format_iso8601_utc(UtcSeconds t) {
  const CivilDateTime c = civil_from_epoch(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

CivilDateTime civil_from_epoch(UtcSeconds t) {
  const std::int64_t days = day_index(t);
  std::int64_t rem = t - days * kSecondsPerDay;
  CivilDateTime c;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<int>(rem / 3600);
  rem %= 3600;
  c.minute = static_cast<int>(rem / 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

UtcSeconds epoch_from_civil(const CivilDateTime& c) {
  return days_from_civil(c.year, c.month, c.day) * kSecondsPerDay + c.hour * 3600 + c.minute * 60 +
         c.second;
}

UtcSeconds add_calendar_months(UtcSeconds t, int months) {
  CivilDateTime c = civil_from_epoch(t);
  std::int64_t idx = static_cast<std::int64_t>(c.year) * 12 + (c.month - 1) + months;
  c.year = static_cast<int>(idx >= 0 ? idx / 12 : (idx - 11) / 12);
  c.month = static_cast<int>(idx - static_cast<std::int64_t>(c.year) * 12) + 1;
  if (c.day > days_in_month(c.year, c.month)) c.day = days_in_month(c.year, c.month);
  return epoch_from_civil(c);
}

MonthKey MonthKey::from_index(std::int64_t idx) {
  MonthKey m;
  m.year = static_cast<int>(idx >= 0 ? idx / 12 : (idx - 11) / 12);
  m.month = static_cast<int>(idx - static_cast<std::int64_t>(m.year) * 12) + 1;
  return m;
}

MonthKey month_of(UtcSeconds t) {
  const CivilDateTime c = civil_from_epoch(t);
  return MonthKey{c.year, c.month};
}

std::string to_string(MonthKey m) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", m.year, m.month);
  return buf;
}

std::optional<MonthKey> parse_month_key(std::string_view s) {
  int y = 0, m = 0;
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  if (!read_digits(s, 0, 4, y) || !read_digits(s, 5, 2, m)) return std::nullopt;
  if (m < 1 || m > 12) return std::nullopt;
  return MonthKey{y, m};
}

}  // namespace starwatch
