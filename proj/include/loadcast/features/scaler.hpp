#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "loadcast/features/sample.hpp"

namespace loadcast {

/**
 * Per-channel standardization: 18 input channels plus the target at index 18.
 *
 * The lag channels (11-13) carry load in kW and share the target's
 * statistics. Channels whose standard deviation is below kMinStd get std = 1,
 * so an all-zero channel stays exactly zero.
 */
struct Scaler {
  static constexpr std::size_t kTarget = schema::kChannels;
  static constexpr double kMinStd = 1e-12;

  std::vector<double> mean = std::vector<double>(schema::kChannels + 1, 0.0);
  std::vector<double> stddev = std::vector<double>(schema::kChannels + 1, 1.0);

  Tensor scale_input(const Tensor &input) const {
    expect_rank(input, 2, "scaler input");
    if (input.dim(1) != schema::kChannels)
      throw DimensionError("scaler input: expected 18 channels, got " + shape_str(input.shape()));
    Tensor out(input.shape());
    for (std::size_t r = 0; r < input.dim(0); ++r)
      for (std::size_t c = 0; c < schema::kChannels; ++c)
        out.at(r, c) = (input.at(r, c) - mean[c]) / stddev[c];
    return out;
  }

  Tensor unscale_input(const Tensor &scaled) const {
    Tensor out(scaled.shape());
    for (std::size_t r = 0; r < scaled.dim(0); ++r)
      for (std::size_t c = 0; c < schema::kChannels; ++c)
        out.at(r, c) = scaled.at(r, c) * stddev[c] + mean[c];
    return out;
  }

  double scale_target(double kw) const { return (kw - mean[kTarget]) / stddev[kTarget]; }
  double unscale_target(double scaled) const { return scaled * stddev[kTarget] + mean[kTarget]; }

  Tensor scale_target(const Tensor &t) const {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i)
      out[i] = scale_target(t[i]);
    return out;
  }

  Tensor unscale_target(const Tensor &t) const {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i)
      out[i] = unscale_target(t[i]);
    return out;
  }

  void apply(Sample &s) const {
    s.scaled_input = scale_input(s.input);
    if (!s.target.empty())
      s.scaled_target = scale_target(s.target);
  }

  void apply(std::span<Sample> samples) const {
    for (Sample &s : samples)
      apply(s);
  }

  friend bool operator==(const Scaler &, const Scaler &) = default;
};

namespace detail {

inline double clamp_std(double var) {
  const double s = std::sqrt(var);
  return s < Scaler::kMinStd ? 1.0 : s;
}

} // namespace detail

/// Fits means and population standard deviations over every input row and
/// every target value of `samples`.
inline Scaler fit_scaler(std::span<const Sample> samples) {
  if (samples.empty())
    throw Error("fit_scaler: no samples");
  Scaler sc;
  const std::size_t C = schema::kChannels;
  std::vector<double> sum(C + 1, 0.0);
  std::size_t rows = 0, targets = 0;
  for (const Sample &s : samples) {
    for (std::size_t r = 0; r < s.input.dim(0); ++r)
      for (std::size_t c = 0; c < C; ++c)
        sum[c] += s.input.at(r, c);
    rows += s.input.dim(0);
    for (double v : s.target.data())
      sum[C] += v;
    targets += s.target.size();
  }
  if (targets == 0)
    throw Error("fit_scaler: samples carry no targets");
  for (std::size_t c = 0; c < C; ++c)
    sc.mean[c] = sum[c] / static_cast<double>(rows);
  sc.mean[C] = sum[C] / static_cast<double>(targets);

  std::vector<double> ss(C + 1, 0.0);
  for (const Sample &s : samples) {
    for (std::size_t r = 0; r < s.input.dim(0); ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = s.input.at(r, c) - sc.mean[c];
        ss[c] += d * d;
      }
    for (double v : s.target.data())
      ss[C] += (v - sc.mean[C]) * (v - sc.mean[C]);
  }
  for (std::size_t c = 0; c < C; ++c)
    sc.stddev[c] = detail::clamp_std(ss[c] / static_cast<double>(rows));
  sc.stddev[C] = detail::clamp_std(ss[C] / static_cast<double>(targets));

  for (std::size_t c = schema::kLag1w; c <= schema::kLag3w; ++c) {
    sc.mean[c] = sc.mean[C];
    sc.stddev[c] = sc.stddev[C];
  }
  return sc;
}

/**
 * Scaler for a forecast made before any complete sample exists: input
 * channels from the (target-free) prediction inputs, target statistics from
 * the raw load history that precedes the first prediction.
 */
inline Scaler fit_scaler_from_history(const Sample &inputs_only,
                                      std::span<const double> load_history) {
  if (load_history.empty())
    throw Error("fit_scaler_from_history: empty load history");
  Sample s = inputs_only;
  s.target = Tensor({load_history.size()},
                    std::vector<double>(load_history.begin(), load_history.end()));
  return fit_scaler(std::span<const Sample>(&s, 1));
}

/// Stacks scaled inputs of the selected samples into (B, 48, 18).
inline Tensor stack_inputs(std::span<const Sample *const> batch) {
  const std::size_t B = batch.size();
  const std::size_t per = batch.front()->scaled_input.size();
  Tensor x({B, batch.front()->scaled_input.dim(0), batch.front()->scaled_input.dim(1)});
  for (std::size_t b = 0; b < B; ++b)
    std::copy(batch[b]->scaled_input.data().begin(), batch[b]->scaled_input.data().end(),
              x.data().begin() + static_cast<std::ptrdiff_t>(b * per));
  return x;
}

inline Tensor stack_targets(std::span<const Sample *const> batch) {
  const std::size_t B = batch.size();
  const std::size_t per = batch.front()->scaled_target.size();
  Tensor y({B, per, 1});
  for (std::size_t b = 0; b < B; ++b)
    std::copy(batch[b]->scaled_target.data().begin(), batch[b]->scaled_target.data().end(),
              y.data().begin() + static_cast<std::ptrdiff_t>(b * per));
  return y;
}

} // namespace loadcast
