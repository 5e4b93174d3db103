#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "loadcast/data/manifest.hpp"
#include "loadcast/eval/report.hpp"
#include "loadcast/neural/gradcheck.hpp"
#include "loadcast/training/run_io.hpp"

namespace loadcast::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kDivergence = 3,
  kSchema = 4,
  kCoverage = 5,
  kGradcheck = 6,
  kInternal = 10
};

class UsageError : public Error {
public:
  using Error::Error;
};

/// Everything a command needs to be replayed; echoed into run directories.
struct CliConfig {
  std::uint64_t seed = 0;
  TrainConfig train;
  Schedule schedule;
  nlohmann::json paths = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"train", loadcast::to_json(train)},
            {"schedule", loadcast::to_json(schedule)},
            {"paths", paths}};
  }
};

inline CliConfig load_cli_config(const std::filesystem::path &path) {
  const nlohmann::json j = read_json_file(path);
  CliConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("train"))
      c.train = train_config_from_json(j.at("train"));
    if (j.contains("schedule")) {
      c.schedule.first_prediction_day =
          j["schedule"].value("first_prediction_day", c.schedule.first_prediction_day);
      c.schedule.retrain_interval_days =
          j["schedule"].value("retrain_interval_days", c.schedule.retrain_interval_days);
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError("config " + path.string() + ": " + e.what());
  }
  return c;
}

/// FORECAST_THREADS: unset means 1; anything but an integer >= 1 is rejected.
inline int forecast_threads() {
  const char *v = std::getenv("FORECAST_THREADS");
  if (!v || !*v)
    return 1;
  int n = 0;
  const std::string_view s(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), n);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || n < 1)
    throw UsageError("FORECAST_THREADS must be an integer >= 1, got '" + std::string(s) + "'");
  return n;
}

/// Synthetic profile and community fixture derived from one fixture seed.
inline HourlySeries fixture_synthetic(std::uint64_t seed, int year = 2010) {
  const auto cal = german_public_holidays(year);
  return generate_reference_profile(derive_seed(seed, "synthetic"), year, ProfileKind::Synthetic,
                                    &cal);
}

inline CommunityFixture fixture_community(std::uint64_t seed, int year = 2010) {
  return generate_community_fixture(derive_seed(seed, "community"), year);
}

namespace detail {

struct Io {
  std::ostream &out;
  std::ostream &err;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// A manifest (.json) or CSV load files with optional weather/holidays.
inline Dataset load_input(const std::vector<std::string> &load_files,
                          const std::optional<std::string> &weather,
                          const std::optional<std::string> &holidays, int resolution) {
  if (load_files.size() == 1 && std::filesystem::path(load_files[0]).extension() == ".json") {
    if (weather || holidays)
      throw UsageError("--weather/--holidays cannot be combined with a manifest");
    return load_dataset(load_manifest(load_files[0]));
  }
  DatasetManifest m;
  m.role = weather ? DatasetRole::Measured : DatasetRole::Synthetic;
  m.resolution_minutes = resolution;
  for (const auto &f : load_files)
    m.load_files.emplace_back(f);
  if (weather)
    m.weather_file = *weather;
  Dataset ds;
  ds.role = m.role;
  std::vector<HourlySeries> members;
  for (const auto &f : m.load_files)
    members.push_back(resample_to_hourly(load_profile_csv(f, resolution)));
  ds.load = aggregate_profiles(members);
  if (m.weather_file)
    ds.weather = load_weather_csv(*m.weather_file);
  ds.year = year_of(date_of(ds.load.start));
  ds.holidays = holidays ? load_holidays(*holidays) : german_public_holidays(ds.year);
  return ds;
}

} // namespace detail

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  int resolution = 15;
  bool quiet = false;

  // pretrain
  std::vector<std::string> data;
  std::optional<std::uint64_t> generate_fixture;
  std::string out;

  // simulate
  std::vector<std::string> load;
  std::optional<std::string> weather;
  std::optional<std::string> holidays;
  std::optional<std::string> pretrained;
  std::string mode = "transfer";

  // report
  std::vector<std::string> runs;
  std::vector<std::string> example_days;

  // gradcheck
  std::uint64_t gradcheck_seed = 1234;
  bool corrupt_gradient = false;
};

inline CliConfig resolve_config(const Options &o) {
  CliConfig c = o.config_path.empty() ? CliConfig{} : load_cli_config(o.config_path);
  if (o.seed)
    c.seed = *o.seed;
  if (o.epochs)
    c.train.epochs = *o.epochs;
  c.train.seed = c.seed;
  return c;
}

inline int cmd_pretrain(const Options &o, detail::Io io) {
  const auto t0 = std::chrono::steady_clock::now();
  CliConfig cfg = resolve_config(o);
  if (o.data.empty() == !o.generate_fixture)
    throw UsageError("pretrain needs exactly one of --data or --generate-fixture");
  HourlySeries synthetic;
  HolidayCalendar holidays;
  if (o.generate_fixture) {
    synthetic = fixture_synthetic(*o.generate_fixture);
    holidays = german_public_holidays(2010);
    cfg.paths["generate_fixture"] = *o.generate_fixture;
  } else {
    const Dataset ds = detail::load_input(o.data, std::nullopt, o.holidays, o.resolution);
    if (ds.weather)
      throw UsageError("pretraining data must not carry weather");
    synthetic = ds.load;
    holidays = ds.holidays;
    cfg.paths["data"] = o.data;
  }
  if (synthetic.whole_days() < 365)
    io.err << "warning: synthetic series covers " << synthetic.whole_days()
           << " days, less than a year\n";
  cfg.paths["out"] = o.out;
  const PretrainResult r =
      pretrain(synthetic, holidays, cfg.train, [&](std::size_t e, double loss) {
        if (!o.quiet && ((e + 1) % 10 == 0 || e == 0))
          io.err << "epoch " << e + 1 << "/" << cfg.train.epochs << " loss " << loss << '\n';
      });
  checkpoint_save(r.checkpoint, o.out);
  io.out << "pretrained on " << r.samples << " samples\n"
         << "epochs      " << r.training.loss_trace.size() << '\n'
         << "final loss  " << format_double(r.training.final_loss()) << '\n'
         << "duration    " << std::fixed << std::setprecision(1) << detail::seconds_since(t0)
         << " s\n"
         << "checkpoint  " << o.out << '\n';
  return kOk;
}

inline int cmd_simulate(const Options &o, detail::Io io) {
  const auto t0 = std::chrono::steady_clock::now();
  CliConfig cfg = resolve_config(o);
  const auto mode = parse_sim_mode(o.mode);
  if (!mode)
    throw UsageError("--mode must be transfer or cold");
  if (*mode == SimMode::Transfer && !o.pretrained)
    throw UsageError("transfer mode needs --pretrained");
  if (*mode == SimMode::Cold && o.pretrained)
    io.err << "warning: cold mode ignores --pretrained " << *o.pretrained << '\n';
  if (o.load.empty() == !o.generate_fixture)
    throw UsageError("simulate needs exactly one of --load or --generate-fixture");

  Dataset ds;
  if (o.generate_fixture) {
    const CommunityFixture fx = fixture_community(*o.generate_fixture);
    ds.load = fx.community_load();
    ds.weather = fx.weather;
    ds.holidays = fx.holidays;
    ds.year = fx.year;
    cfg.paths["generate_fixture"] = *o.generate_fixture;
  } else {
    ds = detail::load_input(o.load, o.weather, o.holidays, o.resolution);
    cfg.paths["load"] = o.load;
    if (o.weather)
      cfg.paths["weather"] = *o.weather;
    if (o.holidays)
      cfg.paths["holidays"] = *o.holidays;
  }
  if (!ds.weather)
    io.err << "warning: no weather data, weather channels are zero\n";

  std::optional<Checkpoint> ckpt;
  if (*mode == SimMode::Transfer) {
    ckpt = checkpoint_load(*o.pretrained);
    cfg.paths["pretrained"] = *o.pretrained;
  }
  cfg.paths["out"] = o.out;

  SimulationHooks hooks;
  if (!o.quiet)
    hooks.log = [&](const std::string &msg) { io.err << msg << '\n'; };
  const SimulationRun run =
      run_simulation(ds.load, ds.weather ? &*ds.weather : nullptr, ds.holidays,
                     ckpt ? &*ckpt : nullptr, *mode, cfg.schedule, cfg.train, hooks);
  nlohmann::json echo = cfg.to_json();
  echo["command"] = "simulate";
  echo["mode"] = to_string(*mode);
  write_run(o.out, run, echo);
  const auto table = daily_mse(run);
  io.out << "mode          " << to_string(*mode) << '\n'
         << "predictions   " << run.days.size() << " days ("
         << format_date(run.days.front().date) << " to " << format_date(run.days.back().date)
         << ")\n"
         << "retrains      " << run.retrains.size() << '\n'
         << "annual mse    " << format_double(annual_mean(table)) << " (scaled), "
         << format_double(annual_mean(table, false)) << " kW^2\n"
         << "duration      " << std::fixed << std::setprecision(1) << detail::seconds_since(t0)
         << " s\n"
         << "run directory " << o.out << '\n';
  return kOk;
}

inline int cmd_report(const Options &o, detail::Io io) {
  if (o.runs.size() != 2)
    throw UsageError("--runs takes exactly two run directories");
  const RunData a = read_run(o.runs[0]);
  const RunData b = read_run(o.runs[1]);
  const DailyTable ta = daily_mse(a), tb = daily_mse(b);
  const Comparison c = compare_runs(o.runs[0], ta, o.runs[1], tb);
  const std::filesystem::path out = o.out;
  std::filesystem::create_directories(out);
  write_comparison_json(c, out / "comparison.json");
  export_monthly_csv(c, out / "monthly.csv");
  export_calendar_csv(ta, out / "calendar_a.csv");
  export_calendar_csv(tb, out / "calendar_b.csv");
  export_loss_traces(a, out / "loss_traces_a.csv", 50);
  export_loss_traces(b, out / "loss_traces_b.csv", 50);
  export_loss_comparison(a, b, out / "loss_comparison.csv", 50);

  std::vector<Date> examples;
  for (const auto &s : o.example_days) {
    const auto d = parse_date(s);
    if (!d)
      throw UsageError("--example-day expects YYYY-MM-DD, got '" + s + "'");
    examples.push_back(*d);
  }
  if (examples.empty()) {
    // a typical day (median error) and the worst day of run a
    DailyTable sorted = ta;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto &x, const auto &y) { return x.mse_scaled < y.mse_scaled; });
    examples.push_back(sorted[sorted.size() / 2].date);
    examples.push_back(sorted.back().date);
  }
  for (Date d : examples)
    export_example_day(a, d, out / ("example_day_" + format_date(d) + ".csv"));

  io.out << "run a         " << o.runs[0] << '\n'
         << "run b         " << o.runs[1] << '\n'
         << "annual mean a " << format_double(c.annual_mean_a) << '\n'
         << "annual mean b " << format_double(c.annual_mean_b) << '\n'
         << "a better in   " << c.months_a_better() << " of " << c.monthly.size() << " months\n"
         << "month  days  mean_a      mean_b\n";
  for (const auto &m : c.monthly) {
    char line[96];
    std::snprintf(line, sizeof line, "%04d-%02u %4zu  %-10.4g  %-10.4g\n", m.a.year, m.a.month,
                  m.a.days, m.a.mean, m.b.mean);
    io.out << line;
  }
  io.out << "worst days of run a:";
  for (const auto &d : worst_days(ta, 5))
    io.out << ' ' << format_date(d.date);
  io.out << "\nreport written to " << out.string() << '\n';
  return kOk;
}

inline int cmd_gradcheck(const Options &o, detail::Io io) {
  const auto t0 = std::chrono::steady_clock::now();
  GradcheckOptions opt;
  opt.corrupt_gradient = o.corrupt_gradient;
  const GradcheckReport r = run_gradcheck(o.gradcheck_seed, opt);
  io.out << "parameter                  max_rel_error  analytic      numeric\n";
  std::map<std::string, double> per_layer;
  std::vector<std::string> layer_order;
  for (const auto &t : r.tensors) {
    char line[128];
    std::snprintf(line, sizeof line, "%-26s %.3e      % .5e  % .5e\n", t.name.c_str(),
                  t.max_rel_error, t.analytic, t.numeric);
    io.out << line;
    const std::string layer = t.name.substr(0, t.name.find('.'));
    if (!per_layer.contains(layer))
      layer_order.push_back(layer);
    per_layer[layer] = std::max(per_layer[layer], t.max_rel_error);
  }
  io.out << "\nlayer       worst_rel_error\n";
  for (const auto &l : layer_order) {
    char line[64];
    std::snprintf(line, sizeof line, "%-11s %.3e\n", l.c_str(), per_layer[l]);
    io.out << line;
  }
  io.out << "checked " << r.checked << " parameters in " << std::fixed << std::setprecision(2)
         << detail::seconds_since(t0) << " s\n";
  io.out << std::scientific << std::setprecision(3) << "max relative error " << r.max_rel_error
         << " (tolerance " << opt.tolerance << ")\n";
  if (!r.passed) {
    io.err << "gradcheck FAILED: worst parameter " << r.worst_parameter << '\n';
    return kGradcheck;
  }
  io.out << "gradcheck passed\n";
  return kOk;
}

inline int cmd_fixture(const Options &o, detail::Io io) {
  if (!o.seed)
    throw UsageError("fixture needs --seed");
  const std::filesystem::path out = o.out;
  const auto syn = fixture_synthetic(*o.seed);
  write_synthetic_fixture(out / "synthetic", syn, german_public_holidays(2010), 2010);
  const auto fx = fixture_community(*o.seed);
  write_community_fixture(out / "community", fx);
  io.out << "synthetic profile  " << (out / "synthetic" / "manifest.json").string() << '\n'
         << "community (" << fx.households.size() << " households) "
         << (out / "community" / "manifest.json").string() << '\n';
  return kOk;
}

/// Parses arguments and runs one subcommand; returns the exit code.
inline int run(int argc, const char *const *argv, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  Options o;
  CLI::App app{"Day-ahead load forecasting for energy communities with BiLSTM transfer learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "loadcast 1.0");

  auto common = [&](CLI::App *c) {
    c->add_option("--config", o.config_path, "JSON config (seed, train, schedule)")
        ->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "Run seed");
    c->add_option("--epochs", o.epochs, "Override training epochs")->check(CLI::PositiveNumber);
    c->add_flag("--quiet,-q", o.quiet, "Suppress progress output");
  };

  auto *pre = app.add_subcommand("pretrain", "Pre-train on a synthetic load profile");
  common(pre);
  pre->add_option("--data", o.data, "Synthetic profile: manifest.json or CSV file");
  pre->add_option("--holidays", o.holidays, "Holiday file for a CSV profile");
  pre->add_option("--resolution", o.resolution, "Minutes between CSV rows")
      ->check(CLI::IsMember({15, 30, 60}));
  pre->add_option("--generate-fixture", o.generate_fixture, "Use the built-in generator with this seed");
  pre->add_option("--out", o.out, "Checkpoint path")->required();

  auto *sim = app.add_subcommand("simulate", "Replay a year of weekly retraining and daily forecasts");
  common(sim);
  sim->add_option("--load", o.load, "Measured load: manifest.json or one or more CSV files");
  sim->add_option("--weather", o.weather, "Hourly weather CSV");
  sim->add_option("--holidays", o.holidays, "Holiday file");
  sim->add_option("--resolution", o.resolution, "Minutes between load CSV rows")
      ->check(CLI::IsMember({15, 30, 60}));
  sim->add_option("--generate-fixture", o.generate_fixture, "Use the built-in community fixture");
  sim->add_option("--pretrained", o.pretrained, "Checkpoint from pretrain");
  sim->add_option("--mode", o.mode, "transfer or cold")->capture_default_str();
  sim->add_option("--out", o.out, "Run directory")->required();

  auto *rep = app.add_subcommand("report", "Compare two runs and write plot-ready exports");
  rep->add_option("--runs", o.runs, "Two run directories (a b)")->required()->expected(2);
  rep->add_option("--example-day", o.example_days, "Date to export from run a (repeatable)");
  rep->add_option("--out", o.out, "Report directory")->required();

  auto *gc = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
  gc->add_option("--seed", o.gradcheck_seed, "Seed")->capture_default_str();
  gc->add_flag("--corrupt-gradient", o.corrupt_gradient, "Perturb one analytic gradient (self test)");

  auto *fix = app.add_subcommand("fixture", "Write the built-in synthetic and community fixtures");
  fix->add_option("--seed", o.seed, "Fixture seed")->required();
  fix->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  detail::Io io{out, err};
  try {
    const int threads = forecast_threads();
    Eigen::setNbThreads(threads);
    if (*pre)
      return cmd_pretrain(o, io);
    if (*sim)
      return cmd_simulate(o, io);
    if (*rep)
      return cmd_report(o, io);
    if (*gc)
      return cmd_gradcheck(o, io);
    if (*fix)
      return cmd_fixture(o, io);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const MismatchedRunsError &e) {
    err << "error: " << e.what() << '\n';
    return kCoverage;
  } catch (const CheckpointError &e) {
    err << "error: " << e.what() << '\n';
    using K = CheckpointError::Kind;
    return e.kind() == K::Schema || e.kind() == K::Version ? kSchema : kData;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DivergenceError &e) {
    err << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

} // namespace loadcast::cli
