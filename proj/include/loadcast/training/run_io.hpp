#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loadcast/data/text.hpp"
#include "loadcast/training/simulation.hpp"

namespace loadcast {

/**
 * Run directory layout:
 *   predictions.csv  date,hour,y_true_kw,y_pred_kw,y_true_scaled,y_pred_scaled
 *   daily_mse.csv    date,mse_scaled,mse_kw2
 *   retrains.csv     day,epochs,final_loss,samples,status
 *   loss_traces.csv  retrain_day,epoch,loss
 *   run.json         mode, seed, train config, schedule, counts, caller config
 * Numbers use the shortest round-trip representation, so identical runs
 * give identical bytes.
 */
inline void write_run(const std::filesystem::path &dir, const SimulationRun &run,
                      const nlohmann::json &caller_config = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_for_write(dir / "predictions.csv");
    out << "date,hour,y_true_kw,y_pred_kw,y_true_scaled,y_pred_scaled\n";
    for (const auto &d : run.days)
      for (std::size_t h = 0; h < schema::kHorizonSteps; ++h)
        out << format_date(d.date) << ',' << h << ',' << format_double(d.y_true_kw[h]) << ','
            << format_double(d.y_pred_kw[h]) << ',' << format_double(d.y_true_scaled[h]) << ','
            << format_double(d.y_pred_scaled[h]) << '\n';
  }
  {
    auto out = open_for_write(dir / "daily_mse.csv");
    out << "date,mse_scaled,mse_kw2\n";
    for (const auto &d : run.days)
      out << format_date(d.date) << ',' << format_double(d.mse_scaled) << ','
          << format_double(d.mse_kw2) << '\n';
  }
  {
    auto out = open_for_write(dir / "retrains.csv");
    out << "day,epochs,final_loss,samples,status\n";
    for (const auto &r : run.retrains)
      out << format_date(r.day) << ',' << r.epochs << ','
          << (r.failed ? std::string("nan") : format_double(r.final_loss())) << ',' << r.samples
          << ',' << (r.failed ? "failed" : "ok") << '\n';
  }
  {
    auto out = open_for_write(dir / "loss_traces.csv");
    out << "retrain_day,epoch,loss\n";
    for (const auto &r : run.retrains)
      for (std::size_t e = 0; e < r.loss_trace.size(); ++e)
        out << format_date(r.day) << ',' << e + 1 << ',' << format_double(r.loss_trace[e]) << '\n';
  }
  nlohmann::json meta = {
      {"mode", to_string(run.mode)},
      {"seed", run.config.seed},
      {"train_config", to_json(run.config)},
      {"schedule", to_json(run.schedule)},
      {"n_predictions", run.days.size()},
      {"n_retrains", run.retrains.size()},
      {"first_prediction", run.days.empty() ? "" : format_date(run.days.front().date)},
      {"last_prediction", run.days.empty() ? "" : format_date(run.days.back().date)},
      {"feature_schema_id", schema::kId},
      {"config", caller_config},
      {"log", run.log}};
  auto out = open_for_write(dir / "run.json");
  out << meta.dump(2) << '\n';
}

struct PredictionRow {
  Date date{};
  int hour = 0;
  double y_true_kw = 0.0;
  double y_pred_kw = 0.0;
  double y_true_scaled = 0.0;
  double y_pred_scaled = 0.0;
};

struct DailyMseRow {
  Date date{};
  double mse_scaled = 0.0;
  double mse_kw2 = 0.0;
};

struct RetrainRow {
  Date day{};
  std::size_t epochs = 0;
  double final_loss = 0.0;
  std::size_t samples = 0;
  std::string status;
};

struct LossRow {
  Date retrain_day{};
  std::size_t epoch = 0;
  double loss = 0.0;
};

/// A run directory read back from disk.
struct RunData {
  std::filesystem::path dir;
  nlohmann::json meta;
  std::vector<PredictionRow> predictions;
  std::vector<DailyMseRow> daily;
  std::vector<RetrainRow> retrains;
  std::vector<LossRow> losses;
};

namespace detail {

/// Rows of a CSV with the given header, split into fields.
inline std::vector<std::vector<std::string>> read_table(const std::filesystem::path &path,
                                                        const std::string &header) {
  const auto lines = read_lines(path);
  if (lines.empty() || std::string(trim(lines.front())) != header)
    throw ParseError(path.string(), 1, "expected header '" + header + "'");
  const std::size_t width = split_commas(header).size();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty())
      continue;
    const auto cols = split_commas(lines[i]);
    if (cols.size() != width)
      throw ParseError(path.string(), i + 1, "expected " + std::to_string(width) + " columns");
    rows.emplace_back(cols.begin(), cols.end());
    rows.back().push_back(std::to_string(i + 1)); // line number for diagnostics
  }
  return rows;
}

inline double field_double(const std::vector<std::string> &row, std::size_t i,
                           const std::filesystem::path &path) {
  const auto v = parse_double(row[i]);
  if (!v)
    throw ParseError(path.string(), std::stoul(row.back()), "bad number '" + row[i] + "'");
  return *v;
}

inline Date field_date(const std::vector<std::string> &row, std::size_t i,
                       const std::filesystem::path &path) {
  const auto d = parse_date(row[i]);
  if (!d)
    throw ParseError(path.string(), std::stoul(row.back()), "bad date '" + row[i] + "'");
  return *d;
}

} // namespace detail

inline RunData read_run(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir))
    throw FileNotFoundError(dir.string());
  RunData r;
  r.dir = dir;
  {
    const auto lines = read_lines(dir / "run.json");
    std::string text;
    for (const auto &l : lines)
      text += l + '\n';
    try {
      r.meta = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
      throw DataError((dir / "run.json").string() + ": " + e.what());
    }
  }
  const auto pp = dir / "predictions.csv";
  for (const auto &row :
       detail::read_table(pp, "date,hour,y_true_kw,y_pred_kw,y_true_scaled,y_pred_scaled"))
    r.predictions.push_back({detail::field_date(row, 0, pp),
                             static_cast<int>(detail::field_double(row, 1, pp)),
                             detail::field_double(row, 2, pp), detail::field_double(row, 3, pp),
                             detail::field_double(row, 4, pp), detail::field_double(row, 5, pp)});
  const auto dp = dir / "daily_mse.csv";
  for (const auto &row : detail::read_table(dp, "date,mse_scaled,mse_kw2"))
    r.daily.push_back({detail::field_date(row, 0, dp), detail::field_double(row, 1, dp),
                       detail::field_double(row, 2, dp)});
  const auto rp = dir / "retrains.csv";
  for (const auto &row : detail::read_table(rp, "day,epochs,final_loss,samples,status"))
    r.retrains.push_back({detail::field_date(row, 0, rp),
                          static_cast<std::size_t>(detail::field_double(row, 1, rp)),
                          detail::field_double(row, 2, rp),
                          static_cast<std::size_t>(detail::field_double(row, 3, rp)), row[4]});
  const auto lp = dir / "loss_traces.csv";
  for (const auto &row : detail::read_table(lp, "retrain_day,epoch,loss"))
    r.losses.push_back({detail::field_date(row, 0, lp),
                        static_cast<std::size_t>(detail::field_double(row, 1, lp)),
                        detail::field_double(row, 2, lp)});
  return r;
}

} // namespace loadcast
