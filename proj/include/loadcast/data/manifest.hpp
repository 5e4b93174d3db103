#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loadcast/data/generator.hpp"
#include "loadcast/data/loaders.hpp"

namespace loadcast {

enum class DatasetRole { Synthetic, Measured };

inline std::string to_string(DatasetRole r) {
  return r == DatasetRole::Synthetic ? "synthetic" : "measured";
}

/// {role, load_files[], weather_file?, holiday_file, year, resolution_minutes?, timezone?}
/// Relative paths are resolved against the manifest's directory.
struct DatasetManifest {
  DatasetRole role = DatasetRole::Measured;
  std::vector<std::filesystem::path> load_files;
  std::optional<std::filesystem::path> weather_file;
  std::filesystem::path holiday_file;
  int year = 2010;
  int resolution_minutes = 15;
  std::string timezone = "local";

  void validate() const {
    if (load_files.empty())
      throw DataError("manifest: no load_files");
    if (role == DatasetRole::Synthetic && weather_file)
      throw DataError("manifest: a synthetic dataset carries no weather file");
  }
};

struct Dataset {
  DatasetRole role = DatasetRole::Measured;
  HourlySeries load;
  std::optional<WeatherTable> weather;
  HolidayCalendar holidays;
  int year = 2010;
};

inline nlohmann::json manifest_to_json(const DatasetManifest &m) {
  nlohmann::json j;
  j["role"] = to_string(m.role);
  j["load_files"] = nlohmann::json::array();
  for (const auto &f : m.load_files)
    j["load_files"].push_back(f.generic_string());
  if (m.weather_file)
    j["weather_file"] = m.weather_file->generic_string();
  j["holiday_file"] = m.holiday_file.generic_string();
  j["year"] = m.year;
  j["resolution_minutes"] = m.resolution_minutes;
  j["timezone"] = m.timezone;
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json &j,
                                          const std::filesystem::path &base = {}) {
  try {
    DatasetManifest m;
    const auto role = j.at("role").get<std::string>();
    if (role == "synthetic")
      m.role = DatasetRole::Synthetic;
    else if (role == "measured")
      m.role = DatasetRole::Measured;
    else
      throw DataError("manifest: unknown role '" + role + "'");
    for (const auto &f : j.at("load_files"))
      m.load_files.push_back(base / f.get<std::string>());
    if (j.contains("weather_file") && !j["weather_file"].is_null())
      m.weather_file = base / j["weather_file"].get<std::string>();
    m.holiday_file = base / j.at("holiday_file").get<std::string>();
    m.year = j.at("year").get<int>();
    m.resolution_minutes = j.value("resolution_minutes", 15);
    m.timezone = j.value("timezone", std::string("local"));
    m.validate();
    return m;
  } catch (const DataError &) {
    throw;
  } catch (const std::exception &e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
}

inline DatasetManifest load_manifest(const std::filesystem::path &path) {
  const auto lines = read_lines(path);
  std::string text;
  for (const auto &l : lines)
    text += l + '\n';
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

/// Loads every file; multiple load files are resampled and summed.
inline Dataset load_dataset(const DatasetManifest &m) {
  m.validate();
  Dataset ds;
  ds.role = m.role;
  ds.year = m.year;
  std::vector<HourlySeries> members;
  members.reserve(m.load_files.size());
  for (const auto &f : m.load_files)
    members.push_back(resample_to_hourly(load_profile_csv(f, m.resolution_minutes)));
  ds.load = aggregate_profiles(members);
  if (m.weather_file)
    ds.weather = load_weather_csv(*m.weather_file);
  ds.holidays = load_holidays(m.holiday_file);
  return ds;
}

inline void write_manifest(const std::filesystem::path &path, const DatasetManifest &m) {
  auto out = open_for_write(path);
  out << manifest_to_json(m).dump(2) << '\n';
}

/// Writes a community fixture (one 15-minute CSV per household, weather,
/// holidays) plus manifest.json into `dir`; returns the manifest path.
inline std::filesystem::path write_community_fixture(const std::filesystem::path &dir,
                                                     const CommunityFixture &fx) {
  DatasetManifest m;
  m.role = DatasetRole::Measured;
  m.year = fx.year;
  m.resolution_minutes = 15;
  for (std::size_t i = 0; i < fx.households.size(); ++i) {
    const auto name = std::filesystem::path("households") / household_file_name(i);
    write_profile_csv(dir / name, fx.households[i]);
    m.load_files.push_back(name);
  }
  write_weather_csv(dir / "weather.csv", fx.weather);
  m.weather_file = "weather.csv";
  write_holidays(dir / "holidays.txt", fx.holidays);
  m.holiday_file = "holidays.txt";
  write_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

/// Writes a synthetic hourly profile plus holidays and manifest.json.
inline std::filesystem::path write_synthetic_fixture(const std::filesystem::path &dir,
                                                     const HourlySeries &profile,
                                                     const HolidayCalendar &holidays, int year) {
  DatasetManifest m;
  m.role = DatasetRole::Synthetic;
  m.year = year;
  m.resolution_minutes = 60;
  write_profile_csv(dir / "synthetic.csv", profile);
  m.load_files.push_back("synthetic.csv");
  write_holidays(dir / "holidays.txt", holidays);
  m.holiday_file = "holidays.txt";
  write_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

} // namespace loadcast
