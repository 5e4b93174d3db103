#include <filesystem>

#include <gtest/gtest.h>

#include "loadcast/data/generator.hpp"
#include "loadcast/training/simulation.hpp"

using namespace loadcast;
using std::chrono::days;
using std::chrono::hours;

namespace {

TrainConfig quick(std::size_t epochs, std::uint64_t seed = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

const HolidayCalendar &holidays() {
  static const HolidayCalendar cal = german_public_holidays(2010);
  return cal;
}

const HourlySeries &synthetic() {
  static const HourlySeries s = generate_reference_profile(21, 2010, ProfileKind::Synthetic);
  return s;
}

const CommunityFixture &community() {
  static const CommunityFixture fx = generate_community_fixture(22, 2010, 20);
  return fx;
}

const HourlySeries &community_load() {
  static const HourlySeries s = community().community_load();
  return s;
}

HourlySeries head_days(const HourlySeries &s, std::size_t n) {
  return HourlySeries{s.start, std::vector<double>(s.values.begin(), s.values.begin() + n * 24)};
}

std::vector<Sample> scaled_samples(const HourlySeries &s, const WeatherTable *w, Date from,
                                   Date to, Scaler *fitted = nullptr) {
  auto v = build_samples(s, w, holidays(), from, to);
  const Scaler sc = fit_scaler(v);
  sc.apply(v);
  if (fitted)
    *fitted = sc;
  return v;
}

} // namespace

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 300u);
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.lr_start, 0.015);
  EXPECT_EQ(c.lr_end, 0.001);
  TrainConfig bad = c;
  bad.epochs = 0;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_EQ(train_config_from_json(to_json(quick(7, 9))).epochs, 7u);
  EXPECT_EQ(train_config_from_json(to_json(quick(7, 9))).seed, 9u);
}

TEST(Train, MemorizesSingleSample) {
  auto s = scaled_samples(community_load(), &community().weather, make_date(2010, 2, 10),
                          make_date(2010, 2, 10));
  Model m = init_weights(ModelConfig{}, 5);
  const auto r = train(m, s, quick(300), 11);
  EXPECT_LT(r.final_loss(), 0.05 * r.loss_trace.front());
  TrainConfig slow = quick(300);
  slow.lr_start = 0.005;
  Model m2 = init_weights(ModelConfig{}, 5);
  EXPECT_LT(train(m2, s, slow, 11).final_loss(), 1e-3);
}

TEST(Train, TraceLengthAndDeterminism) {
  auto s = scaled_samples(synthetic(), nullptr, make_date(2010, 2, 1), make_date(2010, 3, 15));
  Model a = init_weights(ModelConfig{}, 5), b = a;
  const auto ra = train(a, s, quick(4), 11);
  const auto rb = train(b, s, quick(4), 11);
  EXPECT_EQ(ra.loss_trace.size(), 4u);
  EXPECT_EQ(ra.loss_trace, rb.loss_trace);
  EXPECT_EQ(checkpoint_to_json({1, schema::kId, a, {}}), checkpoint_to_json({1, schema::kId, b, {}}));
  Model c = init_weights(ModelConfig{}, 5);
  EXPECT_NE(train(c, s, quick(4), 12).loss_trace, ra.loss_trace);
}

TEST(Train, NonFiniteLossAbortsWithLocation) {
  auto s = scaled_samples(synthetic(), nullptr, make_date(2010, 2, 1), make_date(2010, 2, 3));
  s[1].scaled_target.fill(1e300);
  Model m = init_weights(ModelConfig{}, 5);
  try {
    train(m, s, quick(2), 1);
    FAIL();
  } catch (const DivergenceError &e) {
    EXPECT_EQ(e.epoch(), 0u);
    EXPECT_EQ(e.batch(), 0u);
  }
}

TEST(Train, RequiresScaledSamples) {
  auto v = build_samples(synthetic(), nullptr, holidays(), make_date(2010, 2, 1),
                         make_date(2010, 2, 2));
  Model m = init_weights(ModelConfig{}, 5);
  EXPECT_THROW(train(m, v, quick(1), 1), Error);
  EXPECT_THROW(train(m, std::span<const Sample>{}, quick(1), 1), Error);
}

TEST(Pretrain, CheckpointReproducesLoss) {
  const auto series = head_days(synthetic(), 60);
  const auto r = pretrain(series, holidays(), quick(3));
  EXPECT_EQ(r.samples, 37u);
  EXPECT_EQ(r.training.loss_trace.size(), 3u);
  EXPECT_EQ(r.checkpoint.feature_schema_id, "v1-18ch");

  const auto path = std::filesystem::temp_directory_path() / "loadcast_pretrain_test.ckpt";
  checkpoint_save(r.checkpoint, path);
  const Checkpoint back = checkpoint_load(path);
  std::filesystem::remove(path);
  auto samples = build_all_samples(series, nullptr, holidays());
  back.scaler.apply(samples);
  EXPECT_EQ(back.scaler, r.checkpoint.scaler);
  EXPECT_NEAR(evaluate_loss(back.model, samples), evaluate_loss(r.checkpoint.model, samples),
              1e-12);
  EXPECT_EQ(pretrain(series, holidays(), quick(3)).training.final_loss(),
            r.training.final_loss());
}

TEST(Pretrain, BeatsUntrainedModelOnHeldOutDays) {
  const auto train_part = head_days(synthetic(), 304);
  const auto r = pretrain(train_part, holidays(), quick(30));
  auto held_out = build_samples(synthetic(), nullptr, holidays(), make_date(2010, 11, 1),
                                make_date(2010, 12, 31));
  r.checkpoint.scaler.apply(held_out);
  const double trained = evaluate_loss(r.checkpoint.model, held_out);
  const double untrained =
      evaluate_loss(init_weights(ModelConfig{}, derive_seed(3, "pretrain-init")), held_out);
  EXPECT_LT(trained, 0.5 * untrained) << trained << " vs " << untrained;
}

TEST(Pretrain, TooShortSeriesThrows) {
  EXPECT_THROW(pretrain(head_days(synthetic(), 23), holidays(), quick(1)),
               InsufficientHistoryError);
}

class Finetune : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    pre_ = new PretrainResult(pretrain(head_days(synthetic(), 120), holidays(), quick(15)));
  }
  static void TearDownTestSuite() { delete pre_; }
  static PretrainResult *pre_;
};
PretrainResult *Finetune::pre_ = nullptr;

TEST_F(Finetune, ZeroEpochsKeepsPretrainedOutput) {
  const auto measured = build_samples(community_load(), &community().weather, holidays(),
                                      make_date(2010, 1, 24), make_date(2010, 1, 30));
  TrainConfig c = quick(1);
  c.epochs = 0;
  const auto r = finetune(&pre_->checkpoint, measured, c, 1, 2);
  Sample s = measured.front();
  r.scaler.apply(s);
  const Tensor x = s.scaled_input.reshaped({1, 48, 18});
  EXPECT_EQ(model_forward(x, r.model, Mode::Inference),
            model_forward(x, pre_->checkpoint.model, Mode::Inference));
}

TEST_F(Finetune, WarmStartTrainsFasterOnFirstWeek) {
  const auto week = build_samples(community_load(), &community().weather, holidays(),
                                  make_date(2010, 1, 24), make_date(2010, 1, 30));
  ASSERT_EQ(week.size(), 7u);
  const auto warm = finetune(&pre_->checkpoint, week, quick(30), 8, 9);
  const auto cold = finetune(nullptr, week, quick(30), 8, 9);
  EXPECT_LT(warm.training.final_loss(), cold.training.final_loss());
}

TEST_F(Finetune, ScalerRefitOnMeasuredData) {
  const auto week = build_samples(community_load(), &community().weather, holidays(),
                                  make_date(2010, 1, 24), make_date(2010, 1, 30));
  const auto r = finetune(&pre_->checkpoint, week, quick(1), 8, 9);
  double mean = 0.0;
  for (const Sample &s : week)
    for (double v : s.target.data())
      mean += v;
  mean /= 7.0 * 24.0;
  EXPECT_NEAR(r.scaler.mean[Scaler::kTarget], mean, 1e-9 * mean);
  EXPECT_GT(r.scaler.mean[Scaler::kTarget], 10.0 * pre_->checkpoint.scaler.mean[Scaler::kTarget]);
  EXPECT_NE(r.scaler.stddev[14], 1.0); // temperature is seen now
}

TEST_F(Finetune, SchemaMismatchRejected) {
  Checkpoint other = pre_->checkpoint;
  other.feature_schema_id = "v2-20ch";
  const auto week = build_samples(community_load(), &community().weather, holidays(),
                                  make_date(2010, 1, 24), make_date(2010, 1, 25));
  try {
    finetune(&other, week, quick(1), 1, 1);
    FAIL();
  } catch (const CheckpointError &e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::Schema);
  }
}

TEST(PredictDay, ZeroWeightsGiveInverseScaledBias) {
  Model m = Model::zeros(ModelConfig{});
  m.output.b[0] = 0.75;
  Scaler sc;
  sc.mean[Scaler::kTarget] = 40.0;
  sc.stddev[Scaler::kTarget] = 8.0;
  const auto p = predict_day(m, sc, synthetic(), nullptr, holidays(), make_date(2010, 3, 3));
  EXPECT_EQ(p.size(), 24u);
  for (double v : p)
    EXPECT_EQ(v, 0.75 * 8.0 + 40.0);
}

TEST(PredictDay, MemorizedDayIsReproduced) {
  Scaler sc;
  auto s = scaled_samples(community_load(), &community().weather, make_date(2010, 3, 3),
                          make_date(2010, 3, 3), &sc);
  Model m = init_weights(ModelConfig{}, 5);
  train(m, s, quick(300), 4);
  const auto p = predict_day(m, sc, community_load(), &community().weather, holidays(),
                             make_date(2010, 3, 3));
  // running stats still hold ~5% of their init after 300 steps, so inference is looser
  const std::size_t first = static_cast<std::size_t>(31 + 28 + 2) * 24;
  double se = 0.0, var = 0.0;
  for (std::size_t h = 0; h < 24; ++h) {
    const double y = community_load().values[first + h];
    se += (p[h] - y) * (p[h] - y);
    var += (y - sc.mean[Scaler::kTarget]) * (y - sc.mean[Scaler::kTarget]);
  }
  EXPECT_LT(se, 0.25 * var);
}

TEST(PredictDay, InsufficientHistory) {
  EXPECT_THROW(predict_day(init_weights(ModelConfig{}, 1), Scaler{}, synthetic(), nullptr,
                           holidays(), make_date(2010, 1, 20)),
               InsufficientHistoryError);
}

class Simulation : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    pre_ = new PretrainResult(pretrain(head_days(synthetic(), 60), holidays(), quick(2)));
  }
  static void TearDownTestSuite() { delete pre_; }
  static PretrainResult *pre_;

  static SimulationRun short_run(const HourlySeries &load, const WeatherTable *w, SimMode mode,
                                 std::size_t epochs = 2) {
    return run_simulation(load, w, holidays(), &pre_->checkpoint, mode, Schedule{},
                          quick(epochs));
  }
};
PretrainResult *Simulation::pre_ = nullptr;

TEST_F(Simulation, FullYearScheduleArithmetic) {
  const auto run = short_run(community_load(), &community().weather, SimMode::Transfer, 1);
  ASSERT_EQ(run.retrains.size(), 49u);
  ASSERT_EQ(run.days.size(), 342u);
  for (std::size_t k = 0; k < run.retrains.size(); ++k) {
    const int day = 24 + 7 * static_cast<int>(k);
    EXPECT_EQ(run.retrains[k].day_number, day);
    EXPECT_EQ(run.retrains[k].day, make_date(2010, 1, 1) + days{day - 1});
    EXPECT_EQ(run.retrains[k].samples, static_cast<std::size_t>(day - 24 + 1));
    EXPECT_EQ(run.retrains[k].loss_trace.size(), 1u);
    EXPECT_FALSE(run.retrains[k].failed);
  }
  EXPECT_EQ(run.retrains.back().day, make_date(2010, 12, 26));
  EXPECT_EQ(run.days.front().date, make_date(2010, 1, 24));
  EXPECT_EQ(run.days.back().date, make_date(2010, 12, 31));
}

TEST_F(Simulation, PerturbingTheFutureLeavesPastForecastsAlone) {
  const auto load = head_days(community_load(), 50);
  const auto base = short_run(load, &community().weather, SimMode::Transfer);
  const int d = 40; // perturb day 41 onwards
  HourlySeries changed = load;
  WeatherTable weather = community().weather;
  for (std::size_t i = static_cast<std::size_t>(d) * 24; i < changed.size(); ++i) {
    changed.values[i] = changed.values[i] * 3.0 + 7.0;
    weather.rows[i][Temperature] += 15.0;
  }
  const auto pert = short_run(changed, &weather, SimMode::Transfer);
  ASSERT_EQ(base.days.size(), pert.days.size());
  for (std::size_t i = 0; i < base.days.size(); ++i) {
    const Date date = base.days[i].date;
    if (date <= make_date(2010, 1, d))
      EXPECT_EQ(base.days[i].y_pred_kw, pert.days[i].y_pred_kw) << format_date(date);
  }
  // day 41 itself sees unchanged inputs, later days do not
  EXPECT_EQ(base.days[d - 23].y_pred_kw, pert.days[d - 23].y_pred_kw);
  EXPECT_NE(base.days.back().y_pred_kw, pert.days.back().y_pred_kw);
}

TEST_F(Simulation, DeterministicForSameSeed) {
  const auto load = head_days(community_load(), 40);
  for (auto mode : {SimMode::Transfer, SimMode::Cold}) {
    const auto a = short_run(load, &community().weather, mode);
    const auto b = short_run(load, &community().weather, mode);
    ASSERT_EQ(a.days.size(), 17u);
    for (std::size_t i = 0; i < a.days.size(); ++i)
      ASSERT_EQ(a.days[i].y_pred_kw, b.days[i].y_pred_kw);
  }
}

TEST_F(Simulation, ModesStartFromDifferentModels) {
  const auto load = head_days(community_load(), 30);
  const auto t = short_run(load, &community().weather, SimMode::Transfer);
  const auto c = short_run(load, &community().weather, SimMode::Cold);
  ASSERT_EQ(t.days.size(), 7u);
  EXPECT_NE(t.days[0].y_pred_kw, c.days[0].y_pred_kw);
  // same scaler at every day: truth in scaled units agrees
  EXPECT_EQ(t.days[3].y_true_scaled, c.days[3].y_true_scaled);
}

TEST_F(Simulation, TransferWithoutCheckpointRejected) {
  EXPECT_THROW(run_simulation(community_load(), &community().weather, holidays(), nullptr,
                              SimMode::Transfer, Schedule{}, quick(1)),
               Error);
}

TEST_F(Simulation, WeatherGapHaltsWithDate) {
  const auto load = head_days(community_load(), 40);
  WeatherTable w = community().weather;
  w.rows.resize(24 * 30);
  w.gap_filled.resize(24 * 30);
  try {
    short_run(load, &w, SimMode::Transfer);
    FAIL();
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("2010-02-01"), std::string::npos) << e.what();
  }
}

TEST_F(Simulation, DivergedRetrainKeepsPreviousModel) {
  const auto load = head_days(community_load(), 35);
  TrainConfig c = quick(2);
  c.lr_start = c.lr_end = 1e300;
  const auto run = run_simulation(load, &community().weather, holidays(), &pre_->checkpoint,
                                  SimMode::Transfer, Schedule{}, c);
  ASSERT_EQ(run.retrains.size(), 2u);
  EXPECT_TRUE(run.retrains[0].failed);
  EXPECT_FALSE(run.log.empty());
  EXPECT_EQ(run.days.size(), 12u);
  // failed retrain on day 24: day 25 still uses the starting model and scaler
  const Sample in = build_input_only(load, &community().weather, holidays(), make_date(2010, 1, 24));
  const Scaler boot = fit_scaler_from_history(in, std::span<const double>(load.values.data(), 23 * 24));
  const auto f = forecast_day(pre_->checkpoint.model, boot, load, &community().weather, holidays(),
                              make_date(2010, 1, 25));
  EXPECT_EQ(run.days[1].y_pred_kw, f.kw);
}
