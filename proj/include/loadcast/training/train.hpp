#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "loadcast/features/scaler.hpp"
#include "loadcast/neural/adam.hpp"
#include "loadcast/neural/checkpoint.hpp"
#include "loadcast/neural/init.hpp"
#include "loadcast/neural/lr_schedule.hpp"
#include "loadcast/random.hpp"

namespace loadcast {

/// Hyperparameters shared by pre-training and fine-tuning.
struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double lr_start = 0.015;
  double lr_end = 0.001;

  void validate() const {
    if (epochs < 1)
      throw Error("train config: epochs must be >= 1");
    if (batch_size < 1)
      throw Error("train config: batch_size must be >= 1");
    if (!(lr_start > 0.0) || !(lr_end > 0.0))
      throw Error("train config: learning rates must be positive");
  }

  LearningRateSchedule schedule() const { return {lr_start, lr_end, epochs}; }
};

inline nlohmann::json to_json(const TrainConfig &c) {
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size}, {"seed", c.seed},
          {"lr_start", c.lr_start}, {"lr_end", c.lr_end},         {"loss", "mse"}};
}

/// Reads the fields present in `j`, keeping `base` values for the rest.
inline TrainConfig train_config_from_json(const nlohmann::json &j, TrainConfig base = {}) {
  base.epochs = j.value("epochs", base.epochs);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.seed = j.value("seed", base.seed);
  base.lr_start = j.value("lr_start", base.lr_start);
  base.lr_end = j.value("lr_end", base.lr_end);
  return base;
}

struct TrainResult {
  std::vector<double> loss_trace; // mean training loss per epoch

  double final_loss() const { return loss_trace.empty() ? NAN : loss_trace.back(); }
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/**
 * Mini-batch Adam on already scaled samples. Each epoch draws a fresh
 * permutation from `shuffle_seed`; the last batch may be short. The epoch
 * loss is the sample-weighted mean of the batch losses seen during the epoch.
 * Throws DivergenceError on a non-finite loss or gradient.
 */
inline TrainResult train(Model &model, std::span<const Sample> samples, const TrainConfig &config,
                         std::uint64_t shuffle_seed, const EpochCallback &on_epoch = {}) {
  config.validate();
  if (samples.empty())
    throw Error("train: no samples");
  for (const Sample &s : samples)
    if (s.scaled_input.empty() || s.scaled_target.empty())
      throw Error("train: samples must be scaled before training");

  const auto lr = config.schedule();
  AdamState adam = AdamState::for_model(model);
  std::mt19937_64 rng(shuffle_seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Sample *> batch;

  TrainResult result;
  result.loss_trace.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t b_index = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size, ++b_index) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      batch.clear();
      for (std::size_t i = first; i < last; ++i)
        batch.push_back(&samples[order[i]]);
      const Tensor x = stack_inputs(batch);
      const Tensor y = stack_targets(batch);
      auto lg = loss_and_gradients(model, x, y);
      if (!std::isfinite(lg.loss))
        throw DivergenceError(epoch, b_index, "loss is " + std::to_string(lg.loss));
      try {
        adam_step(model, lg.gradients, adam, lr(epoch));
      } catch (const NonFiniteGradientError &e) {
        throw DivergenceError(epoch, b_index, e.what());
      }
      update_running_stats(model, lg.cache);
      total += lg.loss * static_cast<double>(batch.size());
    }
    result.loss_trace.push_back(total / static_cast<double>(samples.size()));
    if (on_epoch)
      on_epoch(epoch, result.loss_trace.back());
  }
  return result;
}

/// Mean batch loss of `model` over scaled samples, inference mode.
inline double evaluate_loss(const Model &model, std::span<const Sample> samples) {
  if (samples.empty())
    throw Error("evaluate_loss: no samples");
  std::vector<const Sample *> all;
  for (const Sample &s : samples)
    all.push_back(&s);
  return mse_loss(model_forward(stack_inputs(all), model, Mode::Inference), stack_targets(all));
}

struct PretrainResult {
  Checkpoint checkpoint;
  TrainResult training;
  std::size_t samples = 0;
};

/// Pre-training on a synthetic profile: weather channels stay zero, the
/// scaler is fitted on the synthetic samples and stored in the checkpoint.
inline PretrainResult pretrain(const HourlySeries &synthetic, const HolidayCalendar &holidays,
                               const TrainConfig &config, const EpochCallback &on_epoch = {}) {
  std::vector<Sample> samples = build_all_samples(synthetic, nullptr, holidays);
  if (samples.empty())
    throw InsufficientHistoryError("pretrain: the synthetic series has no feasible sample");
  PretrainResult r;
  r.samples = samples.size();
  r.checkpoint.scaler = fit_scaler(samples);
  r.checkpoint.scaler.apply(samples);
  r.checkpoint.model = init_weights(ModelConfig{}, derive_seed(config.seed, "pretrain-init"));
  r.training = train(r.checkpoint.model, samples, config,
                     derive_seed(config.seed, "pretrain-shuffle"), on_epoch);
  return r;
}

struct FinetuneResult {
  Model model;
  Scaler scaler;
  TrainResult training;
};

/**
 * Warm start from `pretrained` (all weights and batch-norm statistics) or a
 * fresh Glorot init from `init_seed` when it is null. The scaler is always
 * refitted on `samples`. Zero epochs returns the starting weights.
 */
inline FinetuneResult finetune(const Checkpoint *pretrained, std::span<const Sample> samples,
                               const TrainConfig &config, std::uint64_t init_seed,
                               std::uint64_t shuffle_seed, const EpochCallback &on_epoch = {}) {
  if (samples.empty())
    throw Error("finetune: no samples");
  if (pretrained && pretrained->feature_schema_id != schema::kId)
    throw CheckpointError(CheckpointError::Kind::Schema,
                          "finetune: checkpoint schema '" + pretrained->feature_schema_id +
                              "' but '" + schema::kId + "' is expected");
  FinetuneResult r;
  r.model = pretrained ? pretrained->model : init_weights(ModelConfig{}, init_seed);
  r.scaler = fit_scaler(samples);
  if (config.epochs == 0)
    return r;
  std::vector<Sample> scaled(samples.begin(), samples.end());
  r.scaler.apply(scaled);
  r.training = train(r.model, scaled, config, shuffle_seed, on_epoch);
  return r;
}

using DayProfile = std::array<double, schema::kHorizonSteps>;

struct DayForecast {
  DayProfile kw{};
  DayProfile scaled{};
};

/// Forecast for `target_day` from data strictly before it.
inline DayForecast forecast_day(const Model &model, const Scaler &scaler,
                                const HourlySeries &series, const WeatherTable *weather,
                                const HolidayCalendar &cal, Date target_day) {
  Sample s = build_input_only(series, weather, cal, target_day);
  scaler.apply(s);
  const Tensor x = s.scaled_input.reshaped({1, schema::kWindowSteps, schema::kChannels});
  const Tensor y = model_forward(x, model, Mode::Inference);
  DayForecast f;
  for (std::size_t h = 0; h < schema::kHorizonSteps; ++h) {
    f.scaled[h] = y[h];
    f.kw[h] = scaler.unscale_target(y[h]);
  }
  for (double v : f.kw)
    if (!std::isfinite(v))
      throw Error("forecast for " + format_date(target_day) + " is not finite");
  return f;
}

/// 24 hourly loads in kW.
inline DayProfile predict_day(const Model &model, const Scaler &scaler,
                              const HourlySeries &series, const WeatherTable *weather,
                              const HolidayCalendar &cal, Date target_day) {
  return forecast_day(model, scaler, series, weather, cal, target_day).kw;
}

} // namespace loadcast
