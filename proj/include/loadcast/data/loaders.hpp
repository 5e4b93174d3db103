#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "loadcast/data/series.hpp"
#include "loadcast/data/text.hpp"

namespace loadcast {

/// Load readings as read from disk, before downsampling.
struct RawSeries {
  std::vector<Minute> timestamps;
  std::vector<double> values;
  int resolution_minutes = 15;
};

namespace detail {

inline void expect_header(const std::vector<std::string> &lines, const std::string &header,
                          const std::filesystem::path &path) {
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty())
    ++first;
  if (std::string(trim(lines[first])) != header)
    throw ParseError(path.string(), first + 1, "expected header '" + header + "'");
}

} // namespace detail

/**
 * Reads `timestamp,load_kw`. Rows must be strictly increasing and aligned to
 * `resolution_minutes`; the smallest spacing must equal the resolution.
 * Gaps are allowed here and surface when downsampling.
 */
inline RawSeries load_profile_csv(const std::filesystem::path &path, int resolution_minutes = 15) {
  if (resolution_minutes <= 0 || 60 % resolution_minutes != 0)
    throw ResolutionError("resolution must divide 60 minutes, got " +
                          std::to_string(resolution_minutes));
  const auto lines = read_lines(path);
  if (all_blank(lines))
    throw EmptyFileError(path.string());
  detail::expect_header(lines, "timestamp,load_kw", path);

  RawSeries raw;
  raw.resolution_minutes = resolution_minutes;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty())
      continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto cols = split_commas(line);
    if (cols.size() != 2)
      throw ParseError(path.string(), i + 1, "expected 2 columns");
    const auto ts = parse_timestamp(cols[0]);
    if (!ts)
      throw ParseError(path.string(), i + 1, "bad timestamp '" + std::string(cols[0]) + "'");
    const auto v = parse_double(cols[1]);
    if (!v || !std::isfinite(*v))
      throw ParseError(path.string(), i + 1, "bad load value '" + std::string(cols[1]) + "'");
    if (*v < 0.0)
      throw ParseError(path.string(), i + 1, "negative load");
    const long minute_of_day = (ts->time_since_epoch().count() % 1440 + 1440) % 1440;
    if (minute_of_day % resolution_minutes != 0)
      throw ResolutionError(path.string() + ":" + std::to_string(i + 1) + ": timestamp " +
                            format_timestamp(*ts) + " is off the " +
                            std::to_string(resolution_minutes) + "-minute grid");
    if (!raw.timestamps.empty()) {
      if (*ts == raw.timestamps.back())
        throw DuplicateTimestampError(path.string() + ":" + std::to_string(i + 1) +
                                      ": duplicate timestamp " + format_timestamp(*ts));
      if (*ts < raw.timestamps.back())
        throw NonMonotoneError(path.string() + ":" + std::to_string(i + 1) + ": timestamp " +
                               format_timestamp(*ts) + " goes backwards");
    }
    raw.timestamps.push_back(*ts);
    raw.values.push_back(*v);
  }
  if (raw.values.empty())
    throw EmptyFileError(path.string());

  if (raw.timestamps.size() > 1) {
    long min_step = std::numeric_limits<long>::max();
    for (std::size_t i = 1; i < raw.timestamps.size(); ++i)
      min_step = std::min<long>(min_step, (raw.timestamps[i] - raw.timestamps[i - 1]).count());
    if (min_step != resolution_minutes)
      throw ResolutionError(path.string() + ": rows are " + std::to_string(min_step) +
                            " minutes apart, expected " + std::to_string(resolution_minutes));
  }
  return raw;
}

/// Hourly mean of the readings in each hour; every hour between the first
/// and last reading must be complete.
inline HourlySeries resample_to_hourly(const RawSeries &raw) {
  const int per_hour = 60 / raw.resolution_minutes;
  if (raw.values.empty())
    throw DataError("resample: empty series");
  const Hour first = std::chrono::floor<std::chrono::hours>(raw.timestamps.front());
  const Hour last = std::chrono::floor<std::chrono::hours>(raw.timestamps.back());
  const auto n_hours = static_cast<std::size_t>((last - first).count()) + 1;
  std::vector<double> sums(n_hours, 0.0);
  std::vector<int> counts(n_hours, 0);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    const auto h = static_cast<std::size_t>(
        (std::chrono::floor<std::chrono::hours>(raw.timestamps[i]) - first).count());
    sums[h] += raw.values[i];
    ++counts[h];
  }
  std::vector<std::string> bad;
  for (std::size_t h = 0; h < n_hours; ++h)
    if (counts[h] != per_hour)
      bad.push_back(format_timestamp(first + std::chrono::hours{static_cast<long>(h)}) + " (" +
                    std::to_string(counts[h]) + " readings)");
  if (!bad.empty()) {
    std::string msg = "incomplete hours: ";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i)
      msg += (i ? ", " : "") + bad[i];
    if (bad.size() > 10)
      msg += ", ... (" + std::to_string(bad.size()) + " total)";
    throw IncompleteHourError(msg);
  }
  HourlySeries out{first, std::vector<double>(n_hours)};
  for (std::size_t h = 0; h < n_hours; ++h)
    out.values[h] = sums[h] / static_cast<double>(per_hour);
  return out;
}

/// Arithmetic mean of the four quarter-hour power values of each hour.
inline HourlySeries resample_15min_to_hourly(const RawSeries &raw) {
  if (raw.resolution_minutes != 15)
    throw ResolutionError("resample_15min_to_hourly: series has " +
                          std::to_string(raw.resolution_minutes) + "-minute resolution");
  return resample_to_hourly(raw);
}

/// Community load: elementwise sum of aligned member series.
inline HourlySeries aggregate_profiles(const std::vector<HourlySeries> &members) {
  if (members.empty())
    throw AlignmentError("aggregate: no series given");
  HourlySeries out = members.front();
  for (std::size_t m = 1; m < members.size(); ++m) {
    const HourlySeries &s = members[m];
    if (s.start != out.start || s.size() != out.size())
      throw AlignmentError("aggregate: series " + std::to_string(m) + " starts " +
                           format_timestamp(s.start) + " with " + std::to_string(s.size()) +
                           " hours; expected " + format_timestamp(out.start) + " with " +
                           std::to_string(out.size()));
    for (std::size_t i = 0; i < s.size(); ++i)
      out.values[i] += s.values[i];
  }
  return out;
}

/// Longest run of missing hours that is filled by linear interpolation.
inline constexpr std::size_t kMaxWeatherGapHours = 3;

/**
 * Reads `timestamp,temperature_c,precipitation_mm,wind_speed_kmh,sunshine_min`.
 * Missing rows and empty cells are gaps; per field, runs of up to three
 * hours between known values are linearly interpolated and flagged in
 * gap_filled. Longer or unbounded gaps are rejected.
 */
inline WeatherTable load_weather_csv(const std::filesystem::path &path) {
  const auto lines = read_lines(path);
  if (all_blank(lines))
    throw EmptyFileError(path.string());
  detail::expect_header(
      lines, "timestamp,temperature_c,precipitation_mm,wind_speed_kmh,sunshine_min", path);

  struct Parsed {
    Hour t;
    std::array<std::optional<double>, 4> v;
  };
  std::vector<Parsed> rows;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty())
      continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto cols = split_commas(line);
    if (cols.size() != 5)
      throw ParseError(path.string(), i + 1, "expected 5 columns");
    const auto ts = parse_timestamp(cols[0]);
    if (!ts)
      throw ParseError(path.string(), i + 1, "bad timestamp '" + std::string(cols[0]) + "'");
    if (ts->time_since_epoch().count() % 60 != 0)
      throw ResolutionError(path.string() + ":" + std::to_string(i + 1) +
                            ": weather timestamps must be on the hour");
    Parsed p{std::chrono::floor<std::chrono::hours>(*ts), {}};
    for (std::size_t k = 0; k < 4; ++k) {
      if (cols[k + 1].empty())
        continue;
      const auto v = parse_double(cols[k + 1]);
      if (!v || !std::isfinite(*v))
        throw ParseError(path.string(), i + 1, "bad value '" + std::string(cols[k + 1]) + "'");
      p.v[k] = *v;
    }
    if (!rows.empty() && p.t <= rows.back().t)
      throw NonMonotoneError(path.string() + ":" + std::to_string(i + 1) + ": timestamp " +
                             format_timestamp(p.t) +
                             (p.t == rows.back().t ? " is duplicated" : " goes backwards"));
    rows.push_back(p);
  }
  if (rows.empty())
    throw EmptyFileError(path.string());

  const Hour start = rows.front().t;
  const auto n = static_cast<std::size_t>((rows.back().t - start).count()) + 1;
  std::vector<std::array<std::optional<double>, 4>> grid(n);
  for (const auto &p : rows)
    grid[static_cast<std::size_t>((p.t - start).count())] = p.v;

  WeatherTable table{start, std::vector<WeatherRow>(n), std::vector<bool>(n, false)};
  for (std::size_t k = 0; k < 4; ++k) {
    std::size_t i = 0;
    while (i < n) {
      if (grid[i][k]) {
        table.rows[i][k] = *grid[i][k];
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < n && !grid[j][k])
        ++j;
      const std::size_t len = j - i;
      const Hour gap_start = start + std::chrono::hours{static_cast<long>(i)};
      if (i == 0 || j == n)
        throw WeatherGapError("weather gap of " + std::to_string(len) + " h at " +
                              format_timestamp(gap_start) + " touches the table edge");
      if (len > kMaxWeatherGapHours)
        throw WeatherGapError("weather gap of " + std::to_string(len) + " h at " +
                              format_timestamp(gap_start) + " exceeds " +
                              std::to_string(kMaxWeatherGapHours) + " h");
      const double a = *grid[i - 1][k], b = *grid[j][k];
      for (std::size_t g = i; g < j; ++g) {
        const double frac = static_cast<double>(g - i + 1) / static_cast<double>(len + 1);
        table.rows[g][k] = a + (b - a) * frac;
        table.gap_filled[g] = true;
      }
      i = j;
    }
  }
  return table;
}

/// One ISO date per line; '#' starts a comment. Duplicates are rejected.
inline HolidayCalendar load_holidays(const std::filesystem::path &path) {
  const auto lines = read_lines(path);
  HolidayCalendar cal;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto d = parse_date(line);
    if (!d)
      throw ParseError(path.string(), i + 1, "bad date '" + std::string(line) + "'");
    if (!cal.dates.insert(*d).second)
      throw ParseError(path.string(), i + 1, "duplicate date " + format_date(*d));
  }
  return cal;
}

// ------------------------------------------------------------------ writers

inline void write_profile_csv(const std::filesystem::path &path, const RawSeries &raw) {
  auto out = open_for_write(path);
  out << "timestamp,load_kw\n";
  for (std::size_t i = 0; i < raw.values.size(); ++i)
    out << format_timestamp(raw.timestamps[i]) << ',' << format_double(raw.values[i]) << '\n';
}

inline void write_profile_csv(const std::filesystem::path &path, const HourlySeries &series) {
  RawSeries raw;
  raw.resolution_minutes = 60;
  for (std::size_t i = 0; i < series.size(); ++i) {
    raw.timestamps.push_back(Minute{series.start + std::chrono::hours{static_cast<long>(i)}});
    raw.values.push_back(series.values[i]);
  }
  write_profile_csv(path, raw);
}

inline void write_weather_csv(const std::filesystem::path &path, const WeatherTable &w) {
  auto out = open_for_write(path);
  out << "timestamp,temperature_c,precipitation_mm,wind_speed_kmh,sunshine_min\n";
  for (std::size_t i = 0; i < w.rows.size(); ++i) {
    out << format_timestamp(w.start + std::chrono::hours{static_cast<long>(i)});
    for (double v : w.rows[i])
      out << ',' << format_double(v);
    out << '\n';
  }
}

inline void write_holidays(const std::filesystem::path &path, const HolidayCalendar &cal) {
  auto out = open_for_write(path);
  out << "# public holidays, one ISO date per line\n";
  for (Date d : cal.dates)
    out << format_date(d) << '\n';
}

} // namespace loadcast
