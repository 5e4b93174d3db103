#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loadcast/data/text.hpp"
#include "loadcast/training/train.hpp"

namespace loadcast {

enum class SimMode { Transfer, Cold };

inline std::string to_string(SimMode m) { return m == SimMode::Transfer ? "transfer" : "cold"; }

inline std::optional<SimMode> parse_sim_mode(std::string_view s) {
  if (s == "transfer")
    return SimMode::Transfer;
  if (s == "cold")
    return SimMode::Cold;
  return std::nullopt;
}

/// Day numbers count from 1 at the first day of the series.
struct Schedule {
  int first_prediction_day = 24;
  int retrain_interval_days = 7;

  void validate() const {
    if (first_prediction_day < 24)
      throw Error("schedule: first_prediction_day must be >= 24 with lag features");
    if (retrain_interval_days < 1)
      throw Error("schedule: retrain_interval_days must be >= 1");
  }
};

inline nlohmann::json to_json(const Schedule &s) {
  return {{"first_prediction_day", s.first_prediction_day},
          {"retrain_interval_days", s.retrain_interval_days},
          {"prediction_horizon_hours", schema::kHorizonSteps}};
}

struct RetrainEvent {
  Date day{};
  int day_number = 0;
  std::size_t samples = 0;
  std::size_t epochs = 0;
  std::vector<double> loss_trace;
  bool failed = false;
  std::string note;

  double final_loss() const { return loss_trace.empty() ? NAN : loss_trace.back(); }
};

struct DayPrediction {
  Date date{};
  DayProfile y_true_kw{};
  DayProfile y_pred_kw{};
  DayProfile y_true_scaled{};
  DayProfile y_pred_scaled{};
  double mse_scaled = 0.0;
  double mse_kw2 = 0.0;
};

struct SimulationRun {
  SimMode mode = SimMode::Transfer;
  TrainConfig config;
  Schedule schedule;
  std::vector<RetrainEvent> retrains;
  std::vector<DayPrediction> days;
  std::vector<std::string> log;
};

struct SimulationHooks {
  std::function<void(const std::string &)> log;
  std::function<void(const RetrainEvent &)> on_retrain;
};

namespace detail {

inline void score(DayPrediction &p, const DayForecast &f, const Scaler &scaler,
                  const HourlySeries &series) {
  double se = 0.0, se_kw = 0.0;
  for (std::size_t h = 0; h < schema::kHorizonSteps; ++h) {
    p.y_true_kw[h] = series.at(Hour{p.date} + std::chrono::hours{static_cast<long>(h)});
    p.y_pred_kw[h] = f.kw[h];
    p.y_true_scaled[h] = scaler.scale_target(p.y_true_kw[h]);
    p.y_pred_scaled[h] = f.scaled[h];
    se += (p.y_pred_scaled[h] - p.y_true_scaled[h]) * (p.y_pred_scaled[h] - p.y_true_scaled[h]);
    se_kw += (p.y_pred_kw[h] - p.y_true_kw[h]) * (p.y_pred_kw[h] - p.y_true_kw[h]);
  }
  p.mse_scaled = se / static_cast<double>(schema::kHorizonSteps);
  p.mse_kw2 = se_kw / static_cast<double>(schema::kHorizonSteps);
}

} // namespace detail

/**
 * Continuous-learning replay over one measured year.
 *
 * Retrains happen at the end of days first, first+7, ... and use every
 * sample whose target day is at most the retrain day; the new model
 * forecasts the following days until the next retrain. The first
 * prediction day is forecast by the starting model (pretrained or freshly
 * initialized) with a scaler bootstrapped from the history before it.
 * Every retrain starts over from the pretrained checkpoint (transfer) or a
 * new seed-derived init (cold) and refits the scaler. A retrain whose loss
 * diverges keeps the previous model.
 */
inline SimulationRun run_simulation(const HourlySeries &load, const WeatherTable *weather,
                                    const HolidayCalendar &cal, const Checkpoint *pretrained,
                                    SimMode mode, const Schedule &schedule,
                                    const TrainConfig &config, const SimulationHooks &hooks = {}) {
  schedule.validate();
  config.validate();
  if (mode == SimMode::Transfer && !pretrained)
    throw Error("simulation: transfer mode needs a pretrained checkpoint");
  if (pretrained && mode == SimMode::Transfer && pretrained->feature_schema_id != schema::kId)
    throw CheckpointError(CheckpointError::Kind::Schema,
                          "simulation: checkpoint schema '" + pretrained->feature_schema_id + "'");

  SimulationRun run;
  run.mode = mode;
  run.config = config;
  run.schedule = schedule;
  auto note = [&](const std::string &msg) {
    run.log.push_back(msg);
    if (hooks.log)
      hooks.log(msg);
  };

  const Date day1 = date_of(load.start);
  if (Hour{day1} != load.start)
    throw DataError("simulation: load series must start at midnight");
  const auto day_of = [&](int n) { return day1 + std::chrono::days{n - 1}; };
  const int n_days = static_cast<int>(load.whole_days());
  const int first = schedule.first_prediction_day;
  if (n_days < first)
    throw InsufficientHistoryError("simulation: series has " + std::to_string(n_days) +
                                   " days, first prediction is day " + std::to_string(first));

  // day-first forecast: starting weights, scaler from the history before it
  Model model = mode == SimMode::Transfer
                    ? pretrained->model
                    : init_weights(ModelConfig{}, derive_seed(config.seed, "init", 0));
  Scaler scaler;
  {
    const Sample in = build_input_only(load, weather, cal, day_of(first));
    const std::size_t hist_hours = static_cast<std::size_t>(first - 1) * 24;
    scaler = fit_scaler_from_history(in, std::span<const double>(load.values.data(), hist_hours));
  }

  std::vector<Sample> samples; // unscaled, target days first..d
  for (int d = first; d <= n_days; ++d) {
    const Date date = day_of(d);
    DayPrediction p;
    p.date = date;
    try {
      detail::score(p, forecast_day(model, scaler, load, weather, cal, date), scaler, load);
      samples.push_back(build_sample(load, weather, cal, date));
    } catch (const DataError &e) {
      throw DataError("simulation halted on " + format_date(date) + ": " + e.what());
    }
    run.days.push_back(p);

    // a retrain on the last day would serve nothing
    if ((d - first) % schedule.retrain_interval_days != 0 || d == n_days)
      continue;

    RetrainEvent ev;
    ev.day = date;
    ev.day_number = d;
    ev.samples = samples.size();
    ev.epochs = config.epochs;
    const auto idx = static_cast<std::uint64_t>(d);
    try {
      FinetuneResult ft =
          finetune(mode == SimMode::Transfer ? pretrained : nullptr, samples, config,
                   derive_seed(config.seed, "init", idx), derive_seed(config.seed, "shuffle", idx));
      model = std::move(ft.model);
      scaler = ft.scaler;
      ev.loss_trace = std::move(ft.training.loss_trace);
    } catch (const DivergenceError &e) {
      ev.failed = true;
      ev.note = e.what();
      note("retrain on " + format_date(date) + " failed, keeping previous model: " + e.what());
    }
    if (!ev.failed)
      note("retrain " + format_date(date) + " (day " + std::to_string(d) + ", " +
           std::to_string(ev.samples) + " samples) final loss " + format_double(ev.final_loss()));
    if (hooks.on_retrain)
      hooks.on_retrain(ev);
    run.retrains.push_back(std::move(ev));
  }
  return run;
}

} // namespace loadcast
