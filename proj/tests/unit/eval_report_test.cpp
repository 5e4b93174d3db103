#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "loadcast/data/generator.hpp"
#include "loadcast/eval/report.hpp"

using namespace loadcast;
namespace fs = std::filesystem;
using std::chrono::days;

namespace {

// Hand-built run: truth is a fixed shape, prediction adds `offset(day)` in
// scaled units (kW offset is twice that).
template <class Offset>
SimulationRun synthetic_run(Date first, int n_days, Offset offset, std::size_t retrains = 0,
                            std::size_t epochs = 0) {
  SimulationRun run;
  run.config.epochs = epochs == 0 ? 1 : epochs;
  for (int i = 0; i < n_days; ++i) {
    DayPrediction p;
    p.date = first + days{i};
    const double off = offset(i);
    double se = 0.0;
    for (std::size_t h = 0; h < 24; ++h) {
      p.y_true_scaled[h] = std::sin(0.3 * static_cast<double>(h));
      p.y_pred_scaled[h] = p.y_true_scaled[h] + off;
      p.y_true_kw[h] = 20.0 + 2.0 * p.y_true_scaled[h];
      p.y_pred_kw[h] = 20.0 + 2.0 * p.y_pred_scaled[h];
      se += off * off;
    }
    p.mse_scaled = se / 24.0;
    p.mse_kw2 = 4.0 * p.mse_scaled;
    run.days.push_back(p);
  }
  for (std::size_t k = 0; k < retrains; ++k) {
    RetrainEvent ev;
    ev.day = first + days{static_cast<int>(7 * k)};
    ev.day_number = 24 + 7 * static_cast<int>(k);
    ev.samples = 1 + 7 * k;
    ev.epochs = epochs;
    for (std::size_t e = 0; e < epochs; ++e)
      ev.loss_trace.push_back(1.0 / static_cast<double>(e + 1 + k));
    run.retrains.push_back(ev);
  }
  return run;
}

class Report : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("loadcast_report_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunData round_trip(const SimulationRun &run, const std::string &name) {
    write_run(dir_ / name, run);
    return read_run(dir_ / name);
  }

  fs::path dir_;
};

} // namespace

TEST_F(Report, PerfectPredictionsGiveZeroDailyMse) {
  const auto run = synthetic_run(make_date(2010, 1, 24), 10, [](int) { return 0.0; });
  for (const auto &d : daily_mse(round_trip(run, "r"))) {
    EXPECT_EQ(d.mse_scaled, 0.0);
    EXPECT_EQ(d.mse_kw2, 0.0);
  }
}

TEST_F(Report, UnitOffsetGivesUnitMse) {
  const auto run = synthetic_run(make_date(2010, 1, 24), 10, [](int) { return 1.0; });
  const auto t = daily_mse(round_trip(run, "r"));
  ASSERT_EQ(t.size(), 10u);
  for (const auto &d : t) {
    EXPECT_NEAR(d.mse_scaled, 1.0, 1e-12);
    EXPECT_NEAR(d.mse_kw2, 4.0, 1e-12);
  }
}

TEST_F(Report, MissingHourIsRejected) {
  const auto run = synthetic_run(make_date(2010, 1, 24), 3, [](int) { return 0.5; });
  auto data = round_trip(run, "r");
  data.predictions.erase(data.predictions.begin() + 30);
  EXPECT_THROW(daily_mse(data), DataError);
  data.predictions.clear();
  EXPECT_THROW(daily_mse(data), DataError);
}

TEST_F(Report, FixtureDayMatchesHandArithmetic) {
  const auto fx = generate_community_fixture(5, 2010, 12);
  const auto load = fx.community_load();
  const HourlySeries head{load.start, std::vector<double>(load.values.begin(),
                                                          load.values.begin() + 35 * 24)};
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto run = run_simulation(head, &fx.weather, fx.holidays, nullptr, SimMode::Cold,
                                  Schedule{}, cfg);
  const auto data = round_trip(run, "fx");
  // day 30 by hand from the csv rows
  double se = 0.0;
  for (const auto &p : data.predictions)
    if (p.date == make_date(2010, 1, 30))
      se += (p.y_pred_scaled - p.y_true_scaled) * (p.y_pred_scaled - p.y_true_scaled);
  const auto t = daily_mse(data);
  ASSERT_EQ(t.size(), 12u);
  EXPECT_EQ(t[6].date, make_date(2010, 1, 30));
  EXPECT_NEAR(t[6].mse_scaled, se / 24.0, 1e-12);
  EXPECT_NEAR(t[6].mse_scaled, run.days[6].mse_scaled, 1e-12);
  EXPECT_NEAR(t[6].mse_kw2, run.days[6].mse_kw2, 1e-9);
}

TEST(Monthly, TwoDaysPopulationDeviation) {
  const DailyTable t{{make_date(2010, 5, 3), 0.1, 0.0}, {make_date(2010, 5, 9), 0.3, 0.0}};
  const auto m = monthly_stats(t);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].month, 5u);
  EXPECT_EQ(m[0].days, 2u);
  EXPECT_NEAR(m[0].mean, 0.2, 1e-15);
  EXPECT_NEAR(m[0].deviation, 0.1, 1e-15);
}

TEST(Monthly, EqualDaysHaveZeroDeviationAndPartialJanuary) {
  DailyTable t;
  for (int i = 0; i < 342; ++i)
    t.push_back({make_date(2010, 1, 24) + days{i}, 0.25, 1.0});
  const auto m = monthly_stats(t);
  ASSERT_EQ(m.size(), 12u);
  EXPECT_EQ(m[0].days, 8u);
  EXPECT_EQ(m[1].days, 28u);
  for (const auto &s : m) {
    EXPECT_EQ(s.deviation, 0.0);
    EXPECT_GT(s.days, 0u);
  }
}

TEST(Monthly, AnnualMeanIsDayWeightedMonthlyMean) {
  DailyTable t;
  for (int i = 0; i < 342; ++i) {
    const double x = 0.05 + 0.4 * std::abs(std::sin(0.37 * i)) + (i % 11 == 0 ? 2.0 : 0.0);
    t.push_back({make_date(2010, 1, 24) + days{i}, x, 3.0 * x});
  }
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto &m : monthly_stats(t)) {
    weighted += m.mean * static_cast<double>(m.days);
    n += m.days;
  }
  EXPECT_EQ(n, 342u);
  EXPECT_NEAR(annual_mean(t), weighted / 342.0, 1e-12);
  EXPECT_NEAR(annual_mean(t, false), 3.0 * annual_mean(t), 1e-12);
}

TEST(Compare, SelfComparisonHasZeroDifferences) {
  const auto run = synthetic_run(make_date(2010, 1, 24), 60, [](int i) { return 0.1 * (i % 5); });
  const auto t = daily_mse(run);
  const auto c = compare_runs("a", t, "a", t);
  for (const auto &d : c.days)
    EXPECT_EQ(d.diff(), 0.0);
  EXPECT_EQ(c.annual_mean_a, c.annual_mean_b);
  EXPECT_EQ(c.months_a_better(), 0u);
  EXPECT_EQ(c.relative_reduction(), 0.0);
}

TEST(Compare, AntisymmetricAndCountsMonths) {
  const auto ra = synthetic_run(make_date(2010, 1, 24), 67, [](int) { return 0.2; });
  const auto rb = synthetic_run(make_date(2010, 1, 24), 67, [](int i) { return i < 40 ? 0.4 : 0.1; });
  const auto a = daily_mse(ra), b = daily_mse(rb);
  const auto ab = compare_runs("a", a, "b", b), ba = compare_runs("b", b, "a", a);
  ASSERT_EQ(ab.days.size(), ba.days.size());
  for (std::size_t i = 0; i < ab.days.size(); ++i)
    EXPECT_EQ(ab.days[i].diff(), -ba.days[i].diff());
  // Jan 24..Mar 31: a better in Jan and Feb, b better in March
  ASSERT_EQ(ab.monthly.size(), 3u);
  EXPECT_EQ(ab.months_a_better(), 2u);
  EXPECT_EQ(ba.months_a_better(), 1u);
  const auto j = to_json(ab);
  EXPECT_EQ(j["run_a"], "a");
  EXPECT_EQ(j["monthly"].size(), 3u);
  EXPECT_EQ(j["daily_differences"].size(), 67u);
}

TEST(Compare, MismatchedDaySetsRejected) {
  const auto a = daily_mse(synthetic_run(make_date(2010, 1, 24), 30, [](int) { return 0.1; }));
  const auto shorter = daily_mse(synthetic_run(make_date(2010, 1, 24), 29, [](int) { return 0.1; }));
  const auto shifted = daily_mse(synthetic_run(make_date(2010, 1, 25), 30, [](int) { return 0.1; }));
  EXPECT_THROW(compare_runs("a", a, "b", shorter), MismatchedRunsError);
  EXPECT_THROW(compare_runs("a", a, "b", shifted), MismatchedRunsError);
}

TEST_F(Report, AnnualMeanRecomputableFromDailyCsv) {
  const auto run = synthetic_run(make_date(2010, 1, 24), 100, [](int i) { return 0.01 * i; });
  const auto data = round_trip(run, "r");
  double s = 0.0;
  for (const auto &d : data.daily)
    s += d.mse_scaled;
  const auto c = compare_runs("r", daily_mse(data), "r", daily_mse(run));
  EXPECT_NEAR(c.annual_mean_a, s / 100.0, 1e-12);
  EXPECT_NEAR(c.annual_mean_b, s / 100.0, 1e-12);
}

TEST_F(Report, CalendarExportRoundTrips) {
  const auto t = daily_mse(synthetic_run(make_date(2010, 1, 24), 342, [](int i) { return 0.003 * i; }));
  export_calendar_csv(t, dir_ / "cal.csv");
  const auto back = read_calendar_csv(dir_ / "cal.csv");
  ASSERT_EQ(back.size(), 342u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].date, t[i].date);
    EXPECT_EQ(back[i].mse_scaled, t[i].mse_scaled);
    EXPECT_EQ(back[i].mse_kw2, t[i].mse_kw2);
  }
  std::ifstream in(dir_ / "cal.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(first.substr(0, 24), "2010-01-24,2010,1,24,6,0"); // a Sunday
}

TEST_F(Report, MonthlyAndComparisonRoundTrip) {
  const auto a = daily_mse(synthetic_run(make_date(2010, 1, 24), 120, [](int i) { return 0.01 * (i % 9); }));
  const auto b = daily_mse(synthetic_run(make_date(2010, 1, 24), 120, [](int i) { return 0.02 * (i % 4); }));
  const auto c = compare_runs("transfer", a, "cold", b);
  export_monthly_csv(c, dir_ / "monthly.csv");
  const auto m = read_monthly_csv(dir_ / "monthly.csv");
  ASSERT_EQ(m.size(), c.monthly.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i].a.mean, c.monthly[i].a.mean);
    EXPECT_EQ(m[i].b.deviation, c.monthly[i].b.deviation);
    EXPECT_EQ(m[i].a.days, c.monthly[i].a.days);
  }
  write_comparison_json(c, dir_ / "comparison.json");
  const auto j = read_json_file(dir_ / "comparison.json");
  EXPECT_EQ(j["run_b"], "cold");
  EXPECT_EQ(j["annual_mean_a"].get<double>(), c.annual_mean_a);
  EXPECT_EQ(j["months_a_better"].get<std::size_t>(), c.months_a_better());
}

TEST_F(Report, ExampleDayIsVerbatimProjection) {
  const auto data =
      round_trip(synthetic_run(make_date(2010, 1, 24), 20, [](int i) { return 0.1 * i; }), "r");
  const Date day = make_date(2010, 2, 2);
  export_example_day(data, day, dir_ / "ex.csv");
  // compare text, not numbers: the rows must be copied as written
  std::ifstream pred(dir_ / "r" / "predictions.csv"), ex(dir_ / "ex.csv");
  std::vector<std::string> expected;
  for (std::string line; std::getline(pred, line);)
    if (line.rfind("2010-02-02,", 0) == 0) {
      const auto cols = split_commas(line);
      expected.push_back(std::string(cols[1]) + "," + std::string(cols[2]) + "," +
                         std::string(cols[3]));
    }
  std::string line;
  std::getline(ex, line);
  EXPECT_EQ(line, "hour,y_true_kw,y_pred_kw");
  std::vector<std::string> got;
  while (std::getline(ex, line))
    got.push_back(line);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(read_example_day_csv(dir_ / "ex.csv").size(), 24u);
}

TEST_F(Report, ExampleDayUnknownDate) {
  const auto data =
      round_trip(synthetic_run(make_date(2010, 1, 24), 5, [](int) { return 0.1; }), "r");
  EXPECT_THROW(export_example_day(data, make_date(2010, 7, 1), dir_ / "ex.csv"), DataError);
}

TEST_F(Report, LossTraceExportTruncates) {
  for (std::size_t epochs : {20u, 60u}) {
    const auto data = round_trip(
        synthetic_run(make_date(2010, 1, 24), 30, [](int) { return 0.1; }, 5, epochs),
        "r" + std::to_string(epochs));
    const auto path = dir_ / ("loss" + std::to_string(epochs) + ".csv");
    export_loss_traces(data, path, 50);
    const auto rows = read_loss_traces_csv(path);
    EXPECT_EQ(rows.size(), 5u * std::min<std::size_t>(50, epochs));
    EXPECT_EQ(rows.front().epoch, 1u);
    EXPECT_EQ(rows.front().loss, 1.0);
    export_loss_traces(data, path, 0);
    EXPECT_EQ(read_loss_traces_csv(path).size(), 5u * epochs);
  }
}

TEST_F(Report, LossComparisonPairsCommonRetrains) {
  const auto a = round_trip(synthetic_run(make_date(2010, 1, 24), 30, [](int) { return 0.1; }, 3, 10), "a");
  const auto b = round_trip(synthetic_run(make_date(2010, 1, 24), 30, [](int) { return 0.1; }, 2, 10), "b");
  export_loss_comparison(a, b, dir_ / "lc.csv");
  std::ifstream in(dir_ / "lc.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);)
    ++lines;
  EXPECT_EQ(lines, 1u + 2u * 10u);
}

TEST(Neighbourhood, CoversHolidaysAndYearEndEves) {
  const auto cal = german_public_holidays(2010);
  const auto n = holiday_neighbourhood(cal, 1);
  EXPECT_TRUE(n.count(make_date(2010, 12, 24)));
  EXPECT_TRUE(n.count(make_date(2010, 12, 23)));
  EXPECT_TRUE(n.count(make_date(2010, 4, 2)));  // Good Friday
  EXPECT_TRUE(n.count(make_date(2010, 4, 6)));  // day after Easter Monday
  EXPECT_FALSE(n.count(make_date(2010, 7, 15)));
}

TEST(WorstDays, SortedDescending) {
  const DailyTable t{{make_date(2010, 3, 1), 0.2, 0}, {make_date(2010, 3, 2), 0.9, 0},
                     {make_date(2010, 3, 3), 0.5, 0}};
  const auto w = worst_days(t, 2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].date, make_date(2010, 3, 2));
  EXPECT_EQ(w[1].date, make_date(2010, 3, 3));
}
