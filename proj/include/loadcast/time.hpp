#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace loadcast {

// Timestamps are timezone-naive local time; sys_time is used only as a
// uniform hour/minute grid.
using Date = std::chrono::sys_days;
using Hour = std::chrono::sys_time<std::chrono::hours>;
using Minute = std::chrono::sys_time<std::chrono::minutes>;

namespace detail {

inline bool parse_uint(std::string_view s, int &out) {
  if (s.empty())
    return false;
  for (char c : s)
    if (c < '0' || c > '9')
      return false;
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc{};
}

} // namespace detail

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// Strict YYYY-MM-DD; rejects impossible calendar dates.
inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!detail::parse_uint(s.substr(0, 4), y) || !detail::parse_uint(s.substr(5, 2), m) ||
      !detail::parse_uint(s.substr(8, 2), d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok())
    return std::nullopt;
  return Date{ymd};
}

/// "YYYY-MM-DD HH:MM" with optional ":SS" (must be 00); 'T' may replace the space.
inline std::optional<Minute> parse_timestamp(std::string_view s) {
  if (s.size() != 16 && s.size() != 19)
    return std::nullopt;
  if (s[10] != ' ' && s[10] != 'T')
    return std::nullopt;
  const auto date = parse_date(s.substr(0, 10));
  if (!date || s[13] != ':')
    return std::nullopt;
  int hh = 0, mm = 0;
  if (!detail::parse_uint(s.substr(11, 2), hh) || !detail::parse_uint(s.substr(14, 2), mm))
    return std::nullopt;
  if (hh > 23 || mm > 59)
    return std::nullopt;
  if (s.size() == 19 && (s[16] != ':' || s.substr(17, 2) != "00"))
    return std::nullopt;
  return Minute{*date} + std::chrono::hours{hh} + std::chrono::minutes{mm};
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_timestamp(Minute t) {
  const Date d = std::chrono::floor<std::chrono::days>(t);
  const auto rem = t - Minute{d};
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d",
                static_cast<int>(std::chrono::duration_cast<std::chrono::hours>(rem).count()),
                static_cast<int>(rem.count() % 60));
  return format_date(d) + " " + buf;
}

inline std::string format_timestamp(Hour t) { return format_timestamp(Minute{t}); }

inline Date date_of(Hour t) { return std::chrono::floor<std::chrono::days>(t); }

inline int hour_of_day(Hour t) { return static_cast<int>((t - Hour{date_of(t)}).count()); }

inline int year_of(Date d) { return static_cast<int>(std::chrono::year_month_day{d}.year()); }

inline unsigned month_of(Date d) {
  return static_cast<unsigned>(std::chrono::year_month_day{d}.month());
}

inline int days_in_year(int year) { return std::chrono::year{year}.is_leap() ? 366 : 365; }

/// 1-based ordinal day within the year.
inline int day_of_year(Date d) {
  const Date jan1 = make_date(year_of(d), 1, 1);
  return static_cast<int>((d - jan1).count()) + 1;
}

/// Monday = 0 ... Sunday = 6.
inline unsigned weekday_index(Date d) {
  return std::chrono::weekday{d}.iso_encoding() - 1;
}

} // namespace loadcast
