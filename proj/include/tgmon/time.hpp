#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace tgmon {

/// UTC instant, second resolution.
using Timestamp = std::chrono::sys_seconds;
/// UTC calendar date.
using Date = std::chrono::sys_days;

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    value = value * 10 + (s[i] - '0');
  }
  out = value;
  return true;
}

inline std::optional<Date> make_date(int y, int m, int d) {
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

}  // namespace detail

/// Strict `YYYY-MM-DD`.
inline std::optional<Date> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::parse_digits(s, 0, 4, y) || !detail::parse_digits(s, 5, 2, m) ||
      !detail::parse_digits(s, 8, 2, d)) {
    return std::nullopt;
  }
  return detail::make_date(y, m, d);
}

inline std::string format_date(Date date) {
  using namespace std::chrono;
  year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// RFC-3339 timestamp that must denote UTC: suffix `Z` or a zero offset.
/// Fractional seconds are accepted and truncated. Non-zero offsets (local
/// time) are rejected.
inline std::optional<Timestamp> parse_rfc3339_utc(std::string_view s) {
  using namespace std::chrono;
  if (s.size() < 20) return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  if (s[10] != 'T' && s[10] != 't') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!detail::parse_digits(s, 11, 2, hh) || s[13] != ':' || !detail::parse_digits(s, 14, 2, mm) ||
      s[16] != ':' || !detail::parse_digits(s, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
  }
  std::string_view zone = s.substr(pos);
  if (zone != "Z" && zone != "z" && zone != "+00:00" && zone != "-00:00") return std::nullopt;
  return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  Date date = floor<days>(t);
  hh_mm_ss<seconds> tod{t - date};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(date).c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

inline Date day_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

/// ISO-8601 week: weeks start on Monday, week 1 holds the year's first Thursday.
struct IsoWeek {
  int year = 0;
  unsigned week = 0;

  friend auto operator<=>(const IsoWeek&, const IsoWeek&) = default;
};

inline Date iso_week_monday(Date date) {
  using namespace std::chrono;
  weekday wd{date};
  return date - days{(wd.c_encoding() + 6) % 7};
}

inline IsoWeek iso_week_of(Date date) {
  using namespace std::chrono;
  Date thursday = iso_week_monday(date) + days{3};
  year y = year_month_day{thursday}.year();
  Date jan1 = sys_days{y / January / 1};
  auto week = static_cast<unsigned>((thursday - jan1).count() / 7 + 1);
  return IsoWeek{static_cast<int>(y), week};
}

inline Date iso_week_start(IsoWeek w) {
  using namespace std::chrono;
  Date jan4 = sys_days{year{w.year} / January / 4};
  return iso_week_monday(jan4) + days{7 * (static_cast<int>(w.week) - 1)};
}

inline IsoWeek next_iso_week(IsoWeek w) {
  return iso_week_of(iso_week_start(w) + std::chrono::days{7});
}

/// `2021-W09`.
inline std::string format_iso_week(IsoWeek w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02u", w.year, w.week);
  return buf;
}

/// Inclusive range of UTC calendar dates.
struct Period {
  Date start;
  Date end;

  bool valid() const { return start <= end; }
  bool contains(Date d) const { return start <= d && d <= end; }
  bool contains(Timestamp t) const { return contains(day_of(t)); }

  static Period single_day(Date d) { return Period{d, d}; }

  friend bool operator==(const Period&, const Period&) = default;
};

}  // namespace tgmon
