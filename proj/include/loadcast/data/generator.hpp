#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "loadcast/data/loaders.hpp"
#include "loadcast/random.hpp"

namespace loadcast {

/// Gregorian Easter Sunday.
inline Date easter_sunday(int year) {
  const int a = year % 19, b = year / 100, c = year % 100;
  const int d = b / 4, e = b % 4, f = (b + 8) / 25, g = (b - f + 1) / 3;
  const int h = (19 * a + b - d - g + 15) % 30;
  const int i = c / 4, k = c % 4;
  const int l = (32 + 2 * e + 2 * i - h - k) % 7;
  const int m = (a + 11 * h + 22 * l) / 451;
  const int month = (h + l - 7 * m + 114) / 31;
  const int day = (h + l - 7 * m + 114) % 31 + 1;
  return make_date(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
}

/// Nationwide German public holidays plus Easter and Whit Sunday.
inline HolidayCalendar german_public_holidays(int year) {
  using std::chrono::days;
  const Date easter = easter_sunday(year);
  HolidayCalendar cal;
  cal.dates = {make_date(year, 1, 1),  easter - days{2},      easter,
               easter + days{1},       make_date(year, 5, 1), easter + days{39},
               easter + days{49},      easter + days{50},     make_date(year, 10, 3),
               make_date(year, 12, 25), make_date(year, 12, 26)};
  return cal;
}

enum class ProfileKind {
  Synthetic, // smooth standard profile, tiny noise
  Household  // one noisy household with personal timing and appliance spikes
};

namespace detail {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Bump centred at `mu` on the 24 h circle.
inline double daily_bump(double tau, double mu, double sigma) {
  double d = std::fmod(std::abs(tau - mu), 24.0);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / sigma) * (d / sigma));
}

enum class DayType { Workday, Saturday, Sunday, ChristmasEve, NewYearsEve };

inline DayType day_type(Date d, const HolidayCalendar &cal) {
  const std::chrono::year_month_day ymd{d};
  if (ymd.month() == std::chrono::December && ymd.day() == std::chrono::day{24})
    return DayType::ChristmasEve;
  if (ymd.month() == std::chrono::December && ymd.day() == std::chrono::day{31})
    return DayType::NewYearsEve;
  const unsigned wd = weekday_index(d);
  if (cal.contains(d) || wd == 6)
    return DayType::Sunday;
  return wd == 5 ? DayType::Saturday : DayType::Workday;
}

/// Personal timing and amplitude of a daily routine.
struct Routine {
  double base = 0.25;
  double morning_time = 7.0, morning_amp = 0.30;
  double noon_amp = 0.15;
  double evening_time = 19.5, evening_amp = 0.55;
  double weekend_shift = 2.0;
  double scale = 1.0;
};

inline double seasonal_factor(int doy, int year_len) {
  return 1.0 + 0.22 * std::cos(kTwoPi * (doy - 15) / year_len);
}

inline double routine_shape(const Routine &r, DayType type, double tau, int doy, int year_len) {
  // darker winter evenings start earlier
  const double evening = r.evening_time - 0.8 * std::cos(kTwoPi * (doy - 15) / year_len);
  switch (type) {
  case DayType::Workday:
    return r.base + r.morning_amp * daily_bump(tau, r.morning_time, 1.0) +
           r.noon_amp * daily_bump(tau, 12.5, 1.5) +
           r.evening_amp * daily_bump(tau, evening, 2.0);
  case DayType::Saturday:
    return r.base * 1.1 + 0.8 * r.morning_amp * daily_bump(tau, r.morning_time + r.weekend_shift, 1.5) +
           2.0 * r.noon_amp * daily_bump(tau, 12.5, 1.5) +
           0.9 * r.evening_amp * daily_bump(tau, evening, 2.2);
  case DayType::Sunday:
    return r.base * 1.1 +
           0.8 * r.morning_amp * daily_bump(tau, r.morning_time + r.weekend_shift + 0.5, 1.5) +
           2.7 * r.noon_amp * daily_bump(tau, 12.5, 1.3) +
           0.8 * r.evening_amp * daily_bump(tau, evening - 0.5, 2.2);
  case DayType::ChristmasEve:
    return r.base * 1.3 + 0.6 * r.morning_amp * daily_bump(tau, r.morning_time + 2.5, 1.5) +
           1.5 * r.noon_amp * daily_bump(tau, 12.0, 1.5) +
           2.2 * r.evening_amp * daily_bump(tau, 16.5, 2.0) +
           0.6 * r.evening_amp * daily_bump(tau, 21.0, 1.5);
  case DayType::NewYearsEve:
    return r.base * 1.2 + 0.7 * r.morning_amp * daily_bump(tau, r.morning_time + 2.0, 1.5) +
           1.2 * r.noon_amp * daily_bump(tau, 12.5, 1.5) +
           1.4 * r.evening_amp * daily_bump(tau, 21.5, 2.5) +
           0.8 * r.evening_amp * daily_bump(tau, 0.0, 1.0);
  }
  return r.base;
}

} // namespace detail

/**
 * Deterministic one-year profile at `resolution_minutes`. Synthetic
 * profiles follow the average routine with 2 % AR(1) noise; Household
 * profiles draw a personal routine, heavier noise, appliance spikes and a
 * vacation. Always strictly positive.
 */
inline RawSeries generate_reference_raw(std::uint64_t seed, int year, ProfileKind kind,
                                        int resolution_minutes = 60,
                                        const HolidayCalendar *holidays = nullptr) {
  const HolidayCalendar cal = holidays ? *holidays : german_public_holidays(year);
  std::mt19937_64 rng(derive_seed(seed, "profile"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  detail::Routine r;
  double noise_sd = 0.02, persistence = 0.9, spike_rate = 0.0;
  int vacation_start = -1, vacation_len = 0;
  if (kind == ProfileKind::Household) {
    r.base = 0.12 + 0.2 * unif(rng);
    r.morning_time = 6.0 + 2.0 * unif(rng);
    r.morning_amp = 0.15 + 0.35 * unif(rng);
    r.noon_amp = 0.05 + 0.3 * unif(rng);
    r.evening_time = 18.5 + 2.0 * unif(rng);
    r.evening_amp = 0.3 + 0.6 * unif(rng);
    r.weekend_shift = 1.0 + 2.0 * unif(rng);
    r.scale = 0.6 + 1.0 * unif(rng);
    noise_sd = 0.3;
    persistence = 0.6;
    spike_rate = 0.06 + 0.06 * unif(rng);
    vacation_start = 150 + static_cast<int>(100 * unif(rng));
    vacation_len = 7 + static_cast<int>(8 * unif(rng));
  } else {
    r.scale = 0.5;
  }

  const int year_len = days_in_year(year);
  const int steps_per_day = 1440 / resolution_minutes;
  const double dt_hours = resolution_minutes / 60.0;
  const Date jan1 = make_date(year, 1, 1);

  RawSeries out;
  out.resolution_minutes = resolution_minutes;
  out.timestamps.reserve(static_cast<std::size_t>(year_len * steps_per_day));
  out.values.reserve(out.timestamps.capacity());
  double ar = 0.0;
  double spike_left = 0.0, spike_kw = 0.0;
  for (int day = 0; day < year_len; ++day) {
    const Date d = jan1 + std::chrono::days{day};
    const auto type = detail::day_type(d, cal);
    const int doy = day + 1;
    const bool away = day >= vacation_start && day < vacation_start + vacation_len;
    for (int s = 0; s < steps_per_day; ++s) {
      const double tau = s * dt_hours;
      double shape = detail::routine_shape(r, type, tau, doy, year_len);
      if (away)
        shape = r.base;
      double v = r.scale * detail::seasonal_factor(doy, year_len) * shape;
      ar = persistence * ar + std::sqrt(1.0 - persistence * persistence) * normal(rng);
      v *= std::exp(noise_sd * ar - 0.5 * noise_sd * noise_sd);
      if (spike_rate > 0.0) {
        if (spike_left <= 0.0 && !away && unif(rng) < spike_rate * dt_hours) {
          spike_left = 0.25 + 0.75 * unif(rng);
          spike_kw = 0.5 + 2.0 * unif(rng);
        }
        if (spike_left > 0.0) {
          v += spike_kw;
          spike_left -= dt_hours;
        }
      }
      out.timestamps.push_back(Minute{d} + std::chrono::minutes{s * resolution_minutes});
      out.values.push_back(std::max(v, 0.01));
    }
  }
  return out;
}

/// Hourly profile of the given kind.
inline HourlySeries generate_reference_profile(std::uint64_t seed, int year, ProfileKind kind,
                                               const HolidayCalendar *holidays = nullptr) {
  return resample_to_hourly(generate_reference_raw(seed, year, kind, 60, holidays));
}

/// One year of plausible central-European hourly weather.
inline WeatherTable generate_weather(std::uint64_t seed, int year) {
  std::mt19937_64 rng(derive_seed(seed, "weather"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> rain_amount(1.0);

  const int year_len = days_in_year(year);
  WeatherTable w{Hour{make_date(year, 1, 1)}, {}, {}};
  w.rows.reserve(static_cast<std::size_t>(year_len * 24));
  double synoptic = 0.0, cloud = 0.0, wind = 0.0;
  const double phi_t = 0.985, phi_c = 0.95, phi_w = 0.97;
  for (int day = 0; day < year_len; ++day) {
    const int doy = day + 1;
    const double season = -std::cos(detail::kTwoPi * (doy - 20) / year_len);
    const double day_length = 12.0 + 4.2 * std::cos(detail::kTwoPi * (doy - 172) / year_len);
    for (int h = 0; h < 24; ++h) {
      synoptic = phi_t * synoptic + 3.5 * std::sqrt(1 - phi_t * phi_t) * normal(rng);
      cloud = phi_c * cloud + std::sqrt(1 - phi_c * phi_c) * normal(rng);
      wind = phi_w * wind + std::sqrt(1 - phi_w * phi_w) * normal(rng);
      const double cover = 1.0 / (1.0 + std::exp(-(1.2 * cloud + 0.3)));
      const double diurnal = (3.0 + 2.0 * (season + 1.0)) * std::sin(detail::kTwoPi * (h - 9) / 24.0);
      WeatherRow row{};
      row[Temperature] = 9.0 + 10.0 * season + diurnal * (1.0 - 0.5 * cover) + synoptic;
      row[Precipitation] = (cover > 0.75 && unif(rng) < 2.0 * (cover - 0.75)) ? rain_amount(rng) : 0.0;
      row[WindSpeed] = 8.0 + 6.0 * std::abs(wind);
      const bool daylight = std::abs(h + 0.5 - 12.5) < day_length / 2.0;
      row[Sunshine] = daylight ? 60.0 * (1.0 - cover) : 0.0;
      w.rows.push_back(row);
    }
  }
  w.gap_filled.assign(w.rows.size(), false);
  return w;
}

/// Synthetic stand-in for a measured energy community.
struct CommunityFixture {
  std::vector<RawSeries> households; // 15-minute readings
  WeatherTable weather;
  HolidayCalendar holidays;
  int year = 2010;

  /// Community load: hourly means summed over members.
  HourlySeries community_load() const {
    std::vector<HourlySeries> hourly;
    hourly.reserve(households.size());
    for (const auto &h : households)
      hourly.push_back(resample_15min_to_hourly(h));
    return aggregate_profiles(hourly);
  }
};

/**
 * `n_households` household profiles at 15-minute resolution with electric
 * heating that follows temperature, lighting that follows cloud cover and
 * shared weather.
 */
inline CommunityFixture generate_community_fixture(std::uint64_t seed, int year = 2010,
                                                   std::size_t n_households = 74) {
  CommunityFixture fx;
  fx.year = year;
  fx.holidays = german_public_holidays(year);
  fx.weather = generate_weather(derive_seed(seed, "community-weather"), year);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n_households; ++i) {
    const std::uint64_t hs = derive_seed(seed, "household", i);
    RawSeries raw = generate_reference_raw(hs, year, ProfileKind::Household, 15, &fx.holidays);
    std::mt19937_64 rng(derive_seed(hs, "sensitivity"));
    const double heating = unif(rng) < 0.3 ? 0.05 + 0.1 * unif(rng) : 0.01 * unif(rng);
    const double lighting = 0.05 + 0.25 * unif(rng);
    for (std::size_t k = 0; k < raw.values.size(); ++k) {
      const Hour t = std::chrono::floor<std::chrono::hours>(raw.timestamps[k]);
      const WeatherRow &w = fx.weather.at(t);
      const int hod = hour_of_day(t);
      double extra = heating * std::max(0.0, 14.0 - w[Temperature]);
      if (hod >= 16 && hod <= 22)
        extra += lighting * (1.0 - w[Sunshine] / 60.0);
      raw.values[k] += extra;
    }
    fx.households.push_back(std::move(raw));
  }
  return fx;
}

/// File names used when a fixture is written to disk.
inline std::string household_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "household_%02zu.csv", i);
  return buf;
}

} // namespace loadcast
