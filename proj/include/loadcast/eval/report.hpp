#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loadcast/training/run_io.hpp"

namespace loadcast {

/// Per-day errors ordered by date.
using DailyTable = std::vector<DailyMseRow>;

inline DailyTable daily_mse(const SimulationRun &run) {
  DailyTable t;
  for (const auto &d : run.days)
    t.push_back({d.date, d.mse_scaled, d.mse_kw2});
  return t;
}

/// Recomputes daily MSEs from the hourly predictions of a run directory.
/// Every listed day must carry hours 0..23.
inline DailyTable daily_mse(const RunData &run) {
  if (run.predictions.empty())
    throw DataError("daily_mse: run " + run.dir.string() + " has no predictions");
  std::map<Date, std::vector<const PredictionRow *>> by_day;
  for (const auto &p : run.predictions)
    by_day[p.date].push_back(&p);
  DailyTable t;
  for (const auto &[date, rows] : by_day) {
    std::vector<bool> seen(schema::kHorizonSteps, false);
    double se = 0.0, se_kw = 0.0;
    for (const PredictionRow *p : rows) {
      if (p->hour < 0 || p->hour >= static_cast<int>(schema::kHorizonSteps) || seen[p->hour])
        throw DataError("daily_mse: bad or repeated hour " + std::to_string(p->hour) + " on " +
                        format_date(date));
      seen[p->hour] = true;
      se += (p->y_pred_scaled - p->y_true_scaled) * (p->y_pred_scaled - p->y_true_scaled);
      se_kw += (p->y_pred_kw - p->y_true_kw) * (p->y_pred_kw - p->y_true_kw);
    }
    if (rows.size() != schema::kHorizonSteps)
      throw DataError("daily_mse: " + format_date(date) + " is missing hours");
    t.push_back({date, se / 24.0, se_kw / 24.0});
  }
  return t;
}

struct MonthlyStats {
  int year = 0;
  unsigned month = 0;
  double mean = 0.0;
  double deviation = 0.0; // population standard deviation of the daily MSEs
  std::size_t days = 0;
};

/// Mean and population deviation of daily MSE per calendar month present
/// in the table. `scaled` picks scaled units or kW^2.
inline std::vector<MonthlyStats> monthly_stats(const DailyTable &table, bool scaled = true) {
  std::map<std::pair<int, unsigned>, std::vector<double>> groups;
  for (const auto &d : table)
    groups[{year_of(d.date), month_of(d.date)}].push_back(scaled ? d.mse_scaled : d.mse_kw2);
  std::vector<MonthlyStats> out;
  for (const auto &[key, v] : groups) {
    MonthlyStats s;
    s.year = key.first;
    s.month = key.second;
    s.days = v.size();
    for (double x : v)
      s.mean += x;
    s.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
      ss += (x - s.mean) * (x - s.mean);
    s.deviation = std::sqrt(ss / static_cast<double>(v.size()));
    out.push_back(s);
  }
  return out;
}

inline double annual_mean(const DailyTable &table, bool scaled = true) {
  if (table.empty())
    throw DataError("annual_mean: no days");
  double s = 0.0;
  for (const auto &d : table)
    s += scaled ? d.mse_scaled : d.mse_kw2;
  return s / static_cast<double>(table.size());
}

struct MonthComparison {
  MonthlyStats a;
  MonthlyStats b;
  bool a_better() const { return a.mean < b.mean; }
};

struct PairedDay {
  Date date{};
  double a = 0.0;
  double b = 0.0;
  double diff() const { return a - b; }
};

struct Comparison {
  std::string run_a, run_b;
  double annual_mean_a = 0.0, annual_mean_b = 0.0;
  std::vector<PairedDay> days;
  std::vector<MonthComparison> monthly;

  std::size_t months_a_better() const {
    return static_cast<std::size_t>(
        std::count_if(monthly.begin(), monthly.end(), [](const auto &m) { return m.a_better(); }));
  }
  /// 1 - mean_a / mean_b
  double relative_reduction() const { return 1.0 - annual_mean_a / annual_mean_b; }
};

/// Paired comparison in scaled units; both tables must cover the same days.
inline Comparison compare_runs(const std::string &name_a, const DailyTable &a,
                               const std::string &name_b, const DailyTable &b) {
  if (a.size() != b.size())
    throw MismatchedRunsError("compare: runs cover " + std::to_string(a.size()) + " and " +
                              std::to_string(b.size()) + " days");
  Comparison c;
  c.run_a = name_a;
  c.run_b = name_b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].date != b[i].date)
      throw MismatchedRunsError("compare: day " + std::to_string(i) + " is " +
                                format_date(a[i].date) + " in " + name_a + " but " +
                                format_date(b[i].date) + " in " + name_b);
    c.days.push_back({a[i].date, a[i].mse_scaled, b[i].mse_scaled});
  }
  c.annual_mean_a = annual_mean(a);
  c.annual_mean_b = annual_mean(b);
  const auto ma = monthly_stats(a), mb = monthly_stats(b);
  for (std::size_t i = 0; i < ma.size(); ++i)
    c.monthly.push_back({ma[i], mb[i]});
  return c;
}

inline nlohmann::json to_json(const Comparison &c) {
  nlohmann::json monthly = nlohmann::json::array();
  for (const auto &m : c.monthly)
    monthly.push_back({{"year", m.a.year},
                       {"month", m.a.month},
                       {"days", m.a.days},
                       {"mean_a", m.a.mean},
                       {"deviation_a", m.a.deviation},
                       {"mean_b", m.b.mean},
                       {"deviation_b", m.b.deviation},
                       {"a_better", m.a_better()}});
  nlohmann::json days = nlohmann::json::array();
  for (const auto &d : c.days)
    days.push_back({{"date", format_date(d.date)}, {"diff", d.diff()}});
  return {{"run_a", c.run_a},
          {"run_b", c.run_b},
          {"annual_mean_a", c.annual_mean_a},
          {"annual_mean_b", c.annual_mean_b},
          {"months_a_better", c.months_a_better()},
          {"monthly", monthly},
          {"daily_differences", days}};
}

// ------------------------------------------------------------------ exports

/// date,year,month,day,weekday,mse_scaled,mse_kw2 (one row per predicted day)
inline void export_calendar_csv(const DailyTable &table, const std::filesystem::path &path) {
  auto out = open_for_write(path);
  out << "date,year,month,day,weekday,mse_scaled,mse_kw2\n";
  for (const auto &d : table) {
    const std::chrono::year_month_day ymd{d.date};
    out << format_date(d.date) << ',' << year_of(d.date) << ',' << month_of(d.date) << ','
        << static_cast<unsigned>(ymd.day()) << ',' << weekday_index(d.date) << ','
        << format_double(d.mse_scaled) << ',' << format_double(d.mse_kw2) << '\n';
  }
}

inline DailyTable read_calendar_csv(const std::filesystem::path &path) {
  DailyTable t;
  for (const auto &row :
       detail::read_table(path, "date,year,month,day,weekday,mse_scaled,mse_kw2"))
    t.push_back({detail::field_date(row, 0, path), detail::field_double(row, 5, path),
                 detail::field_double(row, 6, path)});
  return t;
}

/// year,month,days,mean_a,deviation_a,mean_b,deviation_b
inline void export_monthly_csv(const Comparison &c, const std::filesystem::path &path) {
  auto out = open_for_write(path);
  out << "year,month,days,mean_a,deviation_a,mean_b,deviation_b\n";
  for (const auto &m : c.monthly)
    out << m.a.year << ',' << m.a.month << ',' << m.a.days << ',' << format_double(m.a.mean)
        << ',' << format_double(m.a.deviation) << ',' << format_double(m.b.mean) << ','
        << format_double(m.b.deviation) << '\n';
}

inline std::vector<MonthComparison> read_monthly_csv(const std::filesystem::path &path) {
  std::vector<MonthComparison> out;
  for (const auto &row :
       detail::read_table(path, "year,month,days,mean_a,deviation_a,mean_b,deviation_b")) {
    MonthComparison m;
    m.a.year = m.b.year = static_cast<int>(detail::field_double(row, 0, path));
    m.a.month = m.b.month = static_cast<unsigned>(detail::field_double(row, 1, path));
    m.a.days = m.b.days = static_cast<std::size_t>(detail::field_double(row, 2, path));
    m.a.mean = detail::field_double(row, 3, path);
    m.a.deviation = detail::field_double(row, 4, path);
    m.b.mean = detail::field_double(row, 5, path);
    m.b.deviation = detail::field_double(row, 6, path);
    out.push_back(m);
  }
  return out;
}

inline void write_comparison_json(const Comparison &c, const std::filesystem::path &path) {
  auto out = open_for_write(path);
  out << to_json(c).dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path &path) {
  const auto lines = read_lines(path);
  std::string text;
  for (const auto &l : lines)
    text += l + '\n';
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// hour,y_true_kw,y_pred_kw for one predicted day.
inline void export_example_day(const RunData &run, Date date, const std::filesystem::path &path) {
  std::vector<const PredictionRow *> rows;
  for (const auto &p : run.predictions)
    if (p.date == date)
      rows.push_back(&p);
  if (rows.empty())
    throw DataError("example day: " + format_date(date) + " was not predicted in " +
                    run.dir.string());
  auto out = open_for_write(path);
  out << "hour,y_true_kw,y_pred_kw\n";
  for (const PredictionRow *p : rows)
    out << p->hour << ',' << format_double(p->y_true_kw) << ',' << format_double(p->y_pred_kw)
        << '\n';
}

struct ExampleHour {
  int hour = 0;
  double y_true_kw = 0.0;
  double y_pred_kw = 0.0;
};

inline std::vector<ExampleHour> read_example_day_csv(const std::filesystem::path &path) {
  std::vector<ExampleHour> out;
  for (const auto &row : detail::read_table(path, "hour,y_true_kw,y_pred_kw"))
    out.push_back({static_cast<int>(detail::field_double(row, 0, path)),
                   detail::field_double(row, 1, path), detail::field_double(row, 2, path)});
  return out;
}

/// retrain_day,epoch,loss keeping at most `max_epochs` epochs per retrain
/// (0 keeps all).
inline void export_loss_traces(const RunData &run, const std::filesystem::path &path,
                               std::size_t max_epochs = 50) {
  auto out = open_for_write(path);
  out << "retrain_day,epoch,loss\n";
  for (const auto &l : run.losses)
    if (max_epochs == 0 || l.epoch <= max_epochs)
      out << format_date(l.retrain_day) << ',' << l.epoch << ',' << format_double(l.loss) << '\n';
}

inline std::vector<LossRow> read_loss_traces_csv(const std::filesystem::path &path) {
  std::vector<LossRow> out;
  for (const auto &row : detail::read_table(path, "retrain_day,epoch,loss"))
    out.push_back({detail::field_date(row, 0, path),
                   static_cast<std::size_t>(detail::field_double(row, 1, path)),
                   detail::field_double(row, 2, path)});
  return out;
}

/// Side-by-side epoch losses of two runs for retrains present in both:
/// retrain_day,epoch,loss_a,loss_b
inline void export_loss_comparison(const RunData &a, const RunData &b,
                                   const std::filesystem::path &path,
                                   std::size_t max_epochs = 50) {
  std::map<std::pair<Date, std::size_t>, double> lb;
  for (const auto &l : b.losses)
    lb[{l.retrain_day, l.epoch}] = l.loss;
  auto out = open_for_write(path);
  out << "retrain_day,epoch,loss_a,loss_b\n";
  for (const auto &l : a.losses) {
    if (max_epochs && l.epoch > max_epochs)
      continue;
    const auto it = lb.find({l.retrain_day, l.epoch});
    if (it == lb.end())
      continue;
    out << format_date(l.retrain_day) << ',' << l.epoch << ',' << format_double(l.loss) << ','
        << format_double(it->second) << '\n';
  }
}

/// Days within `radius` days of a holiday or of Christmas/New Year's Eve.
inline std::set<Date> holiday_neighbourhood(const HolidayCalendar &cal, int radius = 1) {
  std::set<Date> out;
  std::set<Date> anchors = cal.dates;
  for (Date d : cal.dates) {
    anchors.insert(make_date(year_of(d), 12, 24));
    anchors.insert(make_date(year_of(d), 12, 31));
  }
  for (Date d : anchors)
    for (int k = -radius; k <= radius; ++k)
      out.insert(d + std::chrono::days{k});
  return out;
}

/// The n days with the largest scaled MSE, largest first.
inline DailyTable worst_days(DailyTable table, std::size_t n) {
  std::stable_sort(table.begin(), table.end(),
                   [](const auto &x, const auto &y) { return x.mse_scaled > y.mse_scaled; });
  table.resize(std::min(n, table.size()));
  return table;
}

} // namespace loadcast
