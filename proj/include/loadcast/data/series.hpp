#pragma once

#include <array>
#include <optional>
#include <set>
#include <vector>

#include "loadcast/error.hpp"
#include "loadcast/time.hpp"

namespace loadcast {

/// Gap-free hourly load in kW starting at `start`.
struct HourlySeries {
  Hour start{};
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  /// One past the last covered hour.
  Hour end() const { return start + std::chrono::hours{static_cast<long>(values.size())}; }

  bool covers(Hour from, Hour to_exclusive) const {
    return from >= start && to_exclusive <= end() && from <= to_exclusive;
  }

  std::optional<double> get(Hour t) const {
    if (t < start || t >= end())
      return std::nullopt;
    return values[static_cast<std::size_t>((t - start).count())];
  }

  double at(Hour t) const {
    if (auto v = get(t))
      return *v;
    throw InsufficientHistoryError("series has no value at " + format_timestamp(t) +
                                   " (covers " + format_timestamp(start) + " to " +
                                   format_timestamp(end()) + ")");
  }

  /// Number of complete days when the series starts at midnight.
  std::size_t whole_days() const { return values.size() / 24; }

  friend bool operator==(const HourlySeries &, const HourlySeries &) = default;
};

enum WeatherField : std::size_t { Temperature = 0, Precipitation = 1, WindSpeed = 2, Sunshine = 3 };

using WeatherRow = std::array<double, 4>;

/// Hourly weather (temperature degC, precipitation mm, wind speed km/h,
/// sunshine min). gap_filled marks rows where any field was interpolated.
struct WeatherTable {
  Hour start{};
  std::vector<WeatherRow> rows;
  std::vector<bool> gap_filled;

  Hour end() const { return start + std::chrono::hours{static_cast<long>(rows.size())}; }

  bool covers(Hour from, Hour to_exclusive) const {
    return from >= start && to_exclusive <= end();
  }

  const WeatherRow &at(Hour t) const {
    if (t < start || t >= end())
      throw WeatherGapError("weather has no row for " + format_timestamp(t));
    return rows[static_cast<std::size_t>((t - start).count())];
  }
};

/// Public holidays; treated like Sundays by the day-of-week encoder.
struct HolidayCalendar {
  std::set<Date> dates;

  bool contains(Date d) const { return dates.contains(d); }
  std::size_t size() const noexcept { return dates.size(); }
};

} // namespace loadcast
