#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "loadcast/data/series.hpp"

namespace loadcast {

/// Input channel layout of feature schema "v1-18ch".
namespace schema {
inline constexpr const char *kId = "v1-18ch";
inline constexpr std::size_t kChannels = 18;
inline constexpr std::size_t kDayOfWeek = 0; // 7 one-hot channels, Monday first
inline constexpr std::size_t kHourSin = 7;
inline constexpr std::size_t kHourCos = 8;
inline constexpr std::size_t kDayOfYearSin = 9;
inline constexpr std::size_t kDayOfYearCos = 10;
inline constexpr std::size_t kLag1w = 11;
inline constexpr std::size_t kLag2w = 12;
inline constexpr std::size_t kLag3w = 13;
inline constexpr std::size_t kWeather = 14; // temperature, precipitation, wind, sunshine
inline constexpr std::size_t kWeatherChannels = 4;
inline constexpr std::size_t kWindowSteps = 48;
inline constexpr std::size_t kHorizonSteps = 24;
inline constexpr std::array<int, 3> kLagHours = {168, 336, 504};
} // namespace schema

/// One-hot weekday, Monday at index 0. Holidays are encoded as Sunday.
inline std::array<double, 7> encode_day_of_week(Date date, const HolidayCalendar &cal) {
  std::array<double, 7> v{};
  v[cal.contains(date) ? 6 : weekday_index(date)] = 1.0;
  return v;
}

/// (sin, cos) of 2*pi*hour/24.
inline std::pair<double, double> encode_hour(int hour) {
  if (hour < 0 || hour > 23)
    throw Error("encode_hour: hour " + std::to_string(hour) + " outside 0..23");
  const double a = 2.0 * std::numbers::pi * static_cast<double>(hour) / 24.0;
  return {std::sin(a), std::cos(a)};
}

/// (sin, cos) of 2*pi*(doy-1)/days_in_year, so January 1st maps to (0, 1).
inline std::pair<double, double> encode_day_of_year(Date date) {
  const double a = 2.0 * std::numbers::pi * static_cast<double>(day_of_year(date) - 1) /
                   static_cast<double>(days_in_year(year_of(date)));
  return {std::sin(a), std::cos(a)};
}

/// Load one, two and three weeks before t (unscaled kW).
inline std::array<double, 3> lagged_loads(const HourlySeries &series, Hour t) {
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    const Hour at = t - std::chrono::hours{schema::kLagHours[i]};
    const auto v = series.get(at);
    if (!v)
      throw InsufficientHistoryError("lagged load for " + format_timestamp(t) + " needs " +
                                     format_timestamp(at) + " but the series starts at " +
                                     format_timestamp(series.start));
    out[i] = *v;
  }
  return out;
}

} // namespace loadcast
