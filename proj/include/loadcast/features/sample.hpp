#pragma once

#include <vector>

#include "loadcast/features/encoders.hpp"
#include "loadcast/neural/tensor.hpp"

namespace loadcast {

/// One target day: 48x18 inputs from the two preceding days and the 24
/// hourly loads of the day itself. The scaled tensors are filled by
/// Scaler::apply.
struct Sample {
  Date target_day{};
  Tensor input;  // (48, 18) unscaled
  Tensor target; // (24, 1) kW
  Tensor scaled_input;
  Tensor scaled_target;
};

struct FeatureOptions {
  /// Disabling the lag channels (left at zero) only exists to study window
  /// feasibility; the v1-18ch schema always uses them.
  bool lagged_load = true;
};

/// Earliest hour of series data a sample for `target_day` reads.
inline Hour earliest_needed_hour(Date target_day, const FeatureOptions &opt = {}) {
  Hour h = Hour{target_day} - std::chrono::hours{schema::kWindowSteps};
  if (opt.lagged_load)
    h -= std::chrono::hours{schema::kLagHours.back()};
  return h;
}

inline bool sample_feasible(const HourlySeries &series, Date target_day,
                            const FeatureOptions &opt = {}) {
  return series.covers(earliest_needed_hour(target_day, opt),
                       Hour{target_day} + std::chrono::hours{schema::kHorizonSteps});
}

/// Input rows are the 48 hours before `target_day`. `weather == nullptr`
/// selects synthetic mode: weather channels are all zero.
inline Sample build_input_only(const HourlySeries &series, const WeatherTable *weather,
                               const HolidayCalendar &cal, Date target_day,
                               const FeatureOptions &opt = {}) {
  const Hour window_start = Hour{target_day} - std::chrono::hours{schema::kWindowSteps};
  if (!series.covers(earliest_needed_hour(target_day, opt), Hour{target_day}))
    throw InsufficientHistoryError(
        "sample for " + format_date(target_day) + " needs load from " +
        format_timestamp(earliest_needed_hour(target_day, opt)) + " but the series covers " +
        format_timestamp(series.start) + " to " + format_timestamp(series.end()));
  if (weather && !weather->covers(window_start, Hour{target_day}))
    throw WeatherGapError("weather does not cover the input window " +
                          format_timestamp(window_start) + " to " +
                          format_timestamp(Hour{target_day}) + " for " +
                          format_date(target_day));

  Sample s;
  s.target_day = target_day;
  s.input = Tensor({schema::kWindowSteps, schema::kChannels});
  for (std::size_t r = 0; r < schema::kWindowSteps; ++r) {
    const Hour ts = window_start + std::chrono::hours{static_cast<long>(r)};
    const Date day = date_of(ts);
    const auto dow = encode_day_of_week(day, cal);
    for (std::size_t k = 0; k < 7; ++k)
      s.input.at(r, schema::kDayOfWeek + k) = dow[k];
    const auto [hs, hc] = encode_hour(hour_of_day(ts));
    s.input.at(r, schema::kHourSin) = hs;
    s.input.at(r, schema::kHourCos) = hc;
    const auto [ds, dc] = encode_day_of_year(day);
    s.input.at(r, schema::kDayOfYearSin) = ds;
    s.input.at(r, schema::kDayOfYearCos) = dc;
    if (opt.lagged_load) {
      const auto lags = lagged_loads(series, ts);
      for (std::size_t k = 0; k < 3; ++k)
        s.input.at(r, schema::kLag1w + k) = lags[k];
    }
    if (weather) {
      const WeatherRow &w = weather->at(ts);
      for (std::size_t k = 0; k < schema::kWeatherChannels; ++k)
        s.input.at(r, schema::kWeather + k) = w[k];
    }
  }
  return s;
}

inline Sample build_sample(const HourlySeries &series, const WeatherTable *weather,
                           const HolidayCalendar &cal, Date target_day,
                           const FeatureOptions &opt = {}) {
  const Hour day_start{target_day};
  if (!series.covers(day_start, day_start + std::chrono::hours{schema::kHorizonSteps}))
    throw InsufficientHistoryError("series does not cover target day " +
                                   format_date(target_day));
  Sample s = build_input_only(series, weather, cal, target_day, opt);
  s.target = Tensor({schema::kHorizonSteps, 1});
  for (std::size_t h = 0; h < schema::kHorizonSteps; ++h)
    s.target[h] = series.at(day_start + std::chrono::hours{static_cast<long>(h)});
  return s;
}

/// First target day whose sample fits in a series starting at midnight.
inline Date first_feasible_day(const HourlySeries &series, const FeatureOptions &opt = {}) {
  const Hour need = Hour{date_of(series.start)} + std::chrono::hours{schema::kWindowSteps} +
                    (opt.lagged_load ? std::chrono::hours{schema::kLagHours.back()}
                                     : std::chrono::hours{0});
  Date d = date_of(need);
  if (Hour{d} < need)
    d += std::chrono::days{1};
  while (earliest_needed_hour(d, opt) < series.start)
    d += std::chrono::days{1};
  return d;
}

/// Every feasible sample with target day in [from, to].
inline std::vector<Sample> build_samples(const HourlySeries &series, const WeatherTable *weather,
                                         const HolidayCalendar &cal, Date from, Date to,
                                         const FeatureOptions &opt = {}) {
  std::vector<Sample> out;
  for (Date d = std::max(from, first_feasible_day(series, opt)); d <= to;
       d += std::chrono::days{1}) {
    if (!sample_feasible(series, d, opt))
      break;
    out.push_back(build_sample(series, weather, cal, d, opt));
  }
  return out;
}

inline std::vector<Sample> build_all_samples(const HourlySeries &series,
                                             const WeatherTable *weather,
                                             const HolidayCalendar &cal,
                                             const FeatureOptions &opt = {}) {
  if (series.size() < 24)
    return {};
  const Date last = date_of(series.end() - std::chrono::hours{24});
  return build_samples(series, weather, cal, first_feasible_day(series, opt), last, opt);
}

} // namespace loadcast
