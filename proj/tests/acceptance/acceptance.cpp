// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
//
//   acceptance [unit-test-binary ...]
//
// Unit test binaries given on the command line are run as part of the
// encoder/unit criterion. Work files go to $LOADCAST_ACCEPTANCE_DIR or
// ./acceptance_work. Set LOADCAST_REAL_DATA to a directory holding
// synthetic/manifest.json and community/manifest.json to run the real-data
// criterion on measured data instead of the built-in fixture.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "loadcast/cli/app.hpp"
#include "loadcast/neural/gradcheck.hpp"

using namespace loadcast;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr std::size_t kEpochs = 60;

int failures = 0;

void verdict(const std::string &name, bool pass, const std::string &detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass)
    ++failures;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string fmt(const char *f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int run_cli(std::vector<std::string> args, std::string *err_text = nullptr) {
  args.insert(args.begin(), "loadcast");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  std::cerr << out.str() << err.str();
  if (err_text)
    *err_text = err.str();
  return code;
}

TrainConfig config() {
  TrainConfig c;
  c.epochs = kEpochs;
  c.seed = kSeed;
  return c;
}

void check_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const GradcheckOptions opt; // hidden 2/2, window 6, h = 1e-5
  const auto r = run_gradcheck(kSeed, opt);
  const double secs = since(t0);
  verdict("gradient correctness", r.passed && r.max_rel_error < 1e-4 && secs < 30.0,
          "max relative error " + fmt("%.3e", r.max_rel_error) + " over " +
              std::to_string(r.checked) + " parameters (hidden " +
              std::to_string(opt.config.hidden1) + "/" + std::to_string(opt.config.hidden2) +
              ", window " + std::to_string(opt.config.input_steps) + "), " + fmt("%.2f", secs) +
              " s");
}

void check_architecture() {
  const auto t0 = std::chrono::steady_clock::now();
  const Model m = init_weights(ModelConfig{}, kSeed);
  const std::size_t B = 5;
  Tensor x({B, 48, 18});
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::sin(0.37 * static_cast<double>(i)) + 0.1 * static_cast<double>(i % 13);
  ForwardCache c;
  const Tensor y = model_forward(x, m, Mode::Inference, &c);
  bool ok = y.shape() == Shape{B, 24, 1} && c.bilstm1.output.shape() == Shape{B, 48, 20} &&
            c.bilstm2.output.shape() == Shape{B, 48, 60} && c.sliced_from == Shape{B, 48, 60} &&
            c.dense1.input.shape() == Shape{B, 24, 60};
  // the dense head must see exactly steps 24..47 of the second normalized block
  const Tensor h2 = batchnorm_forward(c.bilstm2.output, m.batchnorm2, Mode::Inference);
  for (std::size_t b = 0; ok && b < B; ++b)
    for (std::size_t t = 0; t < 24; ++t)
      for (std::size_t k = 0; k < 60; ++k)
        ok = ok && c.dense1.input.at(b, t, k) == h2.at(b, 24 + t, k);
  verdict("architecture conformance", ok,
          "(B,48,18) -> " + shape_str(y.shape()) + ", widths " +
              std::to_string(c.bilstm1.output.dim(2)) + "/" +
              std::to_string(c.bilstm2.output.dim(2)) + ", head sees steps 24..47, " +
              fmt("%.2f", since(t0)) + " s");
}

void check_schedule(const SimulationRun &run, const HourlySeries &load, const WeatherTable &weather,
                    const HolidayCalendar &cal, const Checkpoint &pre) {
  bool ok = run.retrains.size() == 49 && run.days.size() == 342;
  for (std::size_t k = 0; ok && k < run.retrains.size(); ++k)
    ok = run.retrains[k].day_number == 24 + 7 * static_cast<int>(k) &&
         run.retrains[k].samples == 7 * k + 1;
  ok = ok && run.days.front().date == make_date(2010, 1, 24) &&
       run.days.back().date == make_date(2010, 12, 31);

  // replay on a series that ends the day after day d, with that day's load
  // and weather replaced: every forecast up to and including it must match
  const int d = 45;
  HourlySeries cut{load.start, std::vector<double>(load.values.begin(),
                                                   load.values.begin() + (d + 1) * 24)};
  WeatherTable w = weather;
  for (std::size_t i = static_cast<std::size_t>(d) * 24; i < cut.size(); ++i) {
    cut.values[i] = 5.0 * cut.values[i] + 40.0;
    w.rows[i][Temperature] -= 25.0;
    w.rows[i][Sunshine] = 0.0;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto replay =
      run_simulation(cut, &w, cal, &pre, SimMode::Transfer, Schedule{}, config());
  bool causal = replay.days.size() == static_cast<std::size_t>(d + 1 - 23);
  for (std::size_t i = 0; causal && i < replay.days.size(); ++i)
    causal = replay.days[i].date == run.days[i].date &&
             replay.days[i].y_pred_kw == run.days[i].y_pred_kw;
  verdict("schedule conformance", ok && causal,
          std::to_string(run.retrains.size()) + " retrains (days 24..360 step 7), " +
              std::to_string(run.days.size()) + " predictions, perturbing day " +
              std::to_string(d + 1) + " leaves forecasts for days 24.." + std::to_string(d + 1) +
              (causal ? " unchanged" : " CHANGED") + " (" + fmt("%.0f", since(t0)) + " s)");
}

void check_transfer(const SimulationRun &transfer, const SimulationRun &cold) {
  const auto c = compare_runs("transfer", daily_mse(transfer), "cold", daily_mse(cold));
  std::cerr << "month  transfer   cold\n";
  for (const auto &m : c.monthly)
    std::fprintf(stderr, "%5u  %.5f  %.5f\n", m.a.month, m.a.mean, m.b.mean);
  const std::size_t wins = c.months_a_better();
  const double red = c.relative_reduction();
  verdict("transfer-learning direction", wins >= 9 && red >= 0.25,
          "transfer lower in " + std::to_string(wins) + "/" + std::to_string(c.monthly.size()) +
              " months (need 9), annual " + fmt("%.4f", c.annual_mean_a) + " vs " +
              fmt("%.4f", c.annual_mean_b) + ", reduction " + fmt("%.1f", 100.0 * red) +
              "% (need 25%), " + std::to_string(kEpochs) + " epochs, seed " +
              std::to_string(kSeed));
}

void check_stability(const SimulationRun &transfer, const SimulationRun &cold) {
  int below = 0;
  std::string detail;
  for (std::size_t k = 0; k < 3; ++k) {
    const double a = transfer.retrains[k].loss_trace.at(9), b = cold.retrains[k].loss_trace.at(9);
    below += a < b;
    detail += (k ? ", " : "") + format_date(transfer.retrains[k].day) + " " + fmt("%.4f", a) +
              " vs " + fmt("%.4f", b);
  }
  verdict("training stability", below >= 2,
          "epoch-10 loss transfer below cold in " + std::to_string(below) + "/3 (" + detail + ")");
}

void check_units(const std::vector<std::string> &binaries, const Checkpoint &pre,
                 const HourlySeries &load, const WeatherTable &weather, const HolidayCalendar &cal,
                 const fs::path &work) {
  bool suites = true;
  std::string names;
  for (const auto &b : binaries) {
    const int rc = std::system((b + " --gtest_brief=1 > /dev/null 2>&1").c_str());
    suites = suites && rc == 0;
    names += (names.empty() ? "" : ", ") + fs::path(b).filename().string() + (rc ? " failed" : " ok");
  }

  auto samples = build_samples(load, &weather, cal, make_date(2010, 1, 24), make_date(2010, 12, 31));
  const Scaler sc = fit_scaler(samples);
  double worst = 0.0;
  for (const auto &s : samples) {
    const Tensor back = sc.unscale_input(sc.scale_input(s.input));
    for (std::size_t i = 0; i < back.size(); ++i)
      worst = std::max(worst, std::abs(back[i] - s.input[i]));
    const Tensor t = sc.unscale_target(sc.scale_target(s.target));
    for (std::size_t i = 0; i < t.size(); ++i)
      worst = std::max(worst, std::abs(t[i] - s.target[i]));
  }

  const fs::path a = work / "roundtrip_a.ckpt", b = work / "roundtrip_b.ckpt";
  checkpoint_save(pre, a);
  const Checkpoint loaded = checkpoint_load(a);
  checkpoint_save(loaded, b);
  bool exact = slurp(a) == slurp(b) && loaded.scaler == pre.scaler;
  const auto pa = trainable_parameters(pre.model), pb = trainable_parameters(loaded.model);
  exact = exact && pa.size() == pb.size();
  for (std::size_t i = 0; exact && i < pa.size(); ++i)
    exact = pa[i].tensor->values() == pb[i].tensor->values();
  exact = exact && loaded.model.batchnorm1.running_var == pre.model.batchnorm1.running_var &&
          loaded.model.batchnorm2.running_mean == pre.model.batchnorm2.running_mean;

  verdict("encoder/unit suites", suites && worst < 1e-12 && exact,
          (binaries.empty() ? std::string("no unit suites given") : names) +
              "; scaler round trip max error " + fmt("%.2e", worst) + "; checkpoint round trip " +
              (exact ? "bit-exact" : "NOT bit-exact"));
}

void check_determinism(const fs::path &work, const fs::path &manifest, const fs::path &ckpt) {
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = run_cli({"simulate", "--load", manifest.string(), "--mode", "transfer",
                          "--pretrained", ckpt.string(), "--seed", std::to_string(kSeed),
                          "--epochs", std::to_string(kEpochs), "-q", "--out",
                          (work / "transfer_cli").string()});
  const std::string a = slurp(work / "transfer" / "predictions.csv");
  const std::string b = slurp(work / "transfer_cli" / "predictions.csv");
  verdict("determinism", rc == 0 && !a.empty() && a == b,
          "second full transfer run (from fixture files via the CLI) " +
              std::string(a == b ? "byte-identical" : "DIFFERS") + ", predictions.csv " +
              std::to_string(a.size()) + " bytes, " + fmt("%.0f", since(t0)) + " s");
}

// Mean scaled MSE of the first predicted week and of days near holidays,
// each against the rest of the year.
void check_real_data_path(const fs::path &report, const HolidayCalendar &cal,
                          const std::string &source) {
  bool files = true;
  std::string missing;
  for (const char *f : {"calendar_a.csv", "calendar_b.csv", "monthly.csv", "comparison.json",
                        "loss_traces_a.csv", "loss_traces_b.csv"})
    if (!fs::exists(report / f)) {
      files = false;
      missing += std::string(" ") + f;
    }
  bool example = false;
  for (const auto &e : fs::directory_iterator(report))
    example = example || e.path().filename().string().rfind("example_day_", 0) == 0;
  files = files && example;
  if (!files) {
    verdict("real-data pipeline", false, "missing exports:" + missing);
    return;
  }
  const DailyTable t = read_calendar_csv(report / "calendar_a.csv");
  const auto near = holiday_neighbourhood(cal, 1);
  double week = 0, rest = 0, hol = 0, other = 0;
  std::size_t nw = 0, nr = 0, nh = 0, no = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    (i < 7 ? week : rest) += t[i].mse_scaled;
    ++(i < 7 ? nw : nr);
    if (near.count(t[i].date)) {
      hol += t[i].mse_scaled;
      ++nh;
    } else {
      other += t[i].mse_scaled;
      ++no;
    }
  }
  week /= static_cast<double>(nw);
  rest /= static_cast<double>(nr);
  hol /= static_cast<double>(std::max<std::size_t>(nh, 1));
  other /= static_cast<double>(no);
  verdict("real-data pipeline", week > rest && hol > other,
          source + "; exports written; first week " + fmt("%.4f", week) + " vs rest " +
              fmt("%.4f", rest) + ", holiday neighbourhood (" + std::to_string(nh) + " days) " +
              fmt("%.4f", hol) + " vs other days " + fmt("%.4f", other));
}

void real_data(const fs::path &dir, const fs::path &work) {
  const auto syn = dir / "synthetic" / "manifest.json";
  const auto com = dir / "community" / "manifest.json";
  const std::string ep = std::to_string(kEpochs), seed = std::to_string(kSeed);
  const auto ckpt = work / "real" / "pre.ckpt";
  std::string err;
  int rc = run_cli({"pretrain", "--data", syn.string(), "--seed", seed, "--epochs", ep, "-q",
                    "--out", ckpt.string()},
                   &err);
  for (const char *mode : {"transfer", "cold"}) {
    if (rc != 0)
      break;
    std::vector<std::string> args{"simulate", "--load", com.string(), "--mode", mode,
                                  "--seed", seed, "--epochs", ep, "-q", "--out",
                                  (work / "real" / mode).string()};
    if (std::string(mode) == "transfer") {
      args.push_back("--pretrained");
      args.push_back(ckpt.string());
    }
    rc = run_cli(args, &err);
  }
  if (rc == 0)
    rc = run_cli({"report", "--runs", (work / "real" / "transfer").string(),
                  (work / "real" / "cold").string(), "--out", (work / "real" / "report").string()},
                 &err);
  if (rc != 0) {
    verdict("real-data pipeline", false, "exit " + std::to_string(rc) + ": " + err);
    return;
  }
  const Dataset ds = load_dataset(load_manifest(com));
  check_real_data_path(work / "real" / "report", ds.holidays,
                       "measured data from " + dir.string());
}

} // namespace

int main(int argc, char **argv) {
  const auto t_start = std::chrono::steady_clock::now();
  const std::vector<std::string> binaries(argv + 1, argv + argc);
  const char *env_work = std::getenv("LOADCAST_ACCEPTANCE_DIR");
  const fs::path work = env_work ? fs::path(env_work) : fs::current_path() / "acceptance_work";
  fs::remove_all(work);
  fs::create_directories(work);
  std::cerr << "work directory " << work << '\n';

  try {
    check_gradients();
    check_architecture();

    const HolidayCalendar cal = german_public_holidays(2010);
    auto t0 = std::chrono::steady_clock::now();
    const PretrainResult pre = pretrain(cli::fixture_synthetic(kSeed), cal, config());
    checkpoint_save(pre.checkpoint, work / "pre.ckpt");
    std::cerr << "pretrained: final loss " << pre.training.final_loss() << ", " << since(t0)
              << " s\n";

    const CommunityFixture fx = cli::fixture_community(kSeed);
    write_community_fixture(work / "fixture" / "community", fx);
    const HourlySeries load = fx.community_load();

    t0 = std::chrono::steady_clock::now();
    const SimulationRun transfer = run_simulation(load, &fx.weather, fx.holidays, &pre.checkpoint,
                                                  SimMode::Transfer, Schedule{}, config());
    write_run(work / "transfer", transfer);
    std::cerr << "transfer run: " << since(t0) << " s\n";
    t0 = std::chrono::steady_clock::now();
    const SimulationRun cold = run_simulation(load, &fx.weather, fx.holidays, nullptr,
                                              SimMode::Cold, Schedule{}, config());
    write_run(work / "cold", cold);
    std::cerr << "cold run: " << since(t0) << " s\n";

    check_schedule(transfer, load, fx.weather, fx.holidays, pre.checkpoint);
    check_transfer(transfer, cold);
    check_stability(transfer, cold);
    check_units(binaries, pre.checkpoint, load, fx.weather, fx.holidays, work);
    check_determinism(work, work / "fixture" / "community" / "manifest.json", work / "pre.ckpt");

    if (const char *real = std::getenv("LOADCAST_REAL_DATA"); real && *real) {
      real_data(real, work);
    } else {
      const int rc = run_cli({"report", "--runs", (work / "transfer_cli").string(),
                              (work / "cold").string(), "--out", (work / "report").string()});
      if (rc != 0)
        verdict("real-data pipeline", false, "report exited " + std::to_string(rc));
      else
        check_real_data_path(work / "report", fx.holidays,
                             "LOADCAST_REAL_DATA not set, built-in community fixture through "
                             "files and CLI instead");
    }
  } catch (const std::exception &e) {
    verdict("acceptance run", false, std::string("aborted: ") + e.what());
  }
  std::cerr << "total " << since(t_start) << " s\n";
  return failures == 0 ? 0 : 1;
}
