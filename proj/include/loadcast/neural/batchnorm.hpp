#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "loadcast/neural/tensor.hpp"

namespace loadcast {

enum class Mode { Training, Inference };

/**
 * Per-channel batch normalization over the batch and time axes.
 *
 * The normalizer is sqrt(max(var, epsilon)): a channel whose variance falls
 * below epsilon is divided by sqrt(epsilon) instead, so a constant channel
 * maps to beta. Inference uses the running statistics with the same rule.
 */
struct BatchNormLayer {
  Tensor gamma;        // (C)
  Tensor beta;         // (C)
  Tensor running_mean; // (C)
  Tensor running_var;  // (C)
  double momentum = 0.99;
  double epsilon = 1e-3;

  static BatchNormLayer identity(std::size_t channels) {
    return {Tensor({channels}, 1.0), Tensor({channels}, 0.0), Tensor({channels}, 0.0),
            Tensor({channels}, 1.0)};
  }

  std::size_t channels() const { return gamma.size(); }

  void validate(const std::string &name) const {
    const std::size_t c = gamma.size();
    expect_shape(gamma, {c}, name + ".gamma");
    expect_shape(beta, {c}, name + ".beta");
    expect_shape(running_mean, {c}, name + ".running_mean");
    expect_shape(running_var, {c}, name + ".running_var");
    for (double v : running_var.data())
      if (!(v > 0.0))
        throw DimensionError(name + ".running_var must be strictly positive");
  }

  friend bool operator==(const BatchNormLayer &, const BatchNormLayer &) = default;
};

struct BatchNormCache {
  Tensor normalized;        // (B, T, C), pre-affine
  std::vector<double> mean; // batch statistics (training mode)
  std::vector<double> var;
  std::vector<double> scale; // 1/sqrt(max(var, eps))
  std::vector<bool> clamped;
  Mode mode = Mode::Training;
};

inline Tensor batchnorm_forward(const Tensor &x, const BatchNormLayer &layer, Mode mode,
                                BatchNormCache *cache = nullptr,
                                std::vector<std::string> *warnings = nullptr) {
  expect_rank(x, 3, "batchnorm input");
  const std::size_t C = layer.channels();
  if (x.dim(2) != C)
    throw DimensionError("batchnorm input: expected " + std::to_string(C) +
                         " channels, got shape " + shape_str(x.shape()));
  const std::size_t N = x.dim(0) * x.dim(1);
  if (mode == Mode::Training && N < 2)
    throw DimensionError("batchnorm input: training mode needs batch*time >= 2, got " +
                         std::to_string(N));

  std::vector<double> mean(C, 0.0), var(C, 0.0), scale(C);
  std::vector<bool> clamped(C, false);
  const double *src = x.data().data();
  if (mode == Mode::Training) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        mean[c] += src[n * C + c];
    for (double &m : mean)
      m /= static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = src[n * C + c] - mean[c];
        var[c] += d * d;
      }
    for (double &v : var)
      v /= static_cast<double>(N);
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = layer.running_mean[c];
      var[c] = layer.running_var[c];
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    clamped[c] = var[c] < layer.epsilon;
    scale[c] = 1.0 / std::sqrt(std::max(var[c], layer.epsilon));
    if (clamped[c] && mode == Mode::Training && warnings)
      warnings->push_back("batchnorm channel " + std::to_string(c) + " variance " +
                          std::to_string(var[c]) + " clamped to epsilon");
  }

  Tensor out(x.shape());
  Tensor normalized(x.shape());
  double *dst = out.data().data();
  double *nrm = normalized.data().data();
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const double xh = (src[n * C + c] - mean[c]) * scale[c];
      nrm[n * C + c] = xh;
      dst[n * C + c] = layer.gamma[c] * xh + layer.beta[c];
    }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->scale = std::move(scale);
    cache->clamped = std::move(clamped);
    cache->mode = mode;
  }
  return out;
}

/// Moves the running statistics toward the batch statistics of a training pass.
inline void update_running_stats(BatchNormLayer &layer, const BatchNormCache &cache) {
  for (std::size_t c = 0; c < layer.channels(); ++c) {
    layer.running_mean[c] =
        layer.momentum * layer.running_mean[c] + (1.0 - layer.momentum) * cache.mean[c];
    layer.running_var[c] =
        layer.momentum * layer.running_var[c] + (1.0 - layer.momentum) * cache.var[c];
  }
}

/// Accumulates dgamma/dbeta into grad and returns dL/dx.
inline Tensor batchnorm_backward(const Tensor &dout, const BatchNormLayer &layer,
                                 const BatchNormCache &cache, BatchNormLayer &grad) {
  expect_shape(dout, cache.normalized.shape(), "batchnorm output gradient");
  const std::size_t C = layer.channels();
  const std::size_t N = dout.size() / C;
  const double *dy = dout.data().data();
  const double *xh = cache.normalized.data().data();

  std::vector<double> sum_dxh(C, 0.0), sum_dxh_xh(C, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const double g = dy[n * C + c];
      grad.gamma[c] += g * xh[n * C + c];
      grad.beta[c] += g;
      const double dxh = g * layer.gamma[c];
      sum_dxh[c] += dxh;
      sum_dxh_xh[c] += dxh * xh[n * C + c];
    }

  Tensor dx(dout.shape());
  double *out = dx.data().data();
  const double inv_n = 1.0 / static_cast<double>(N);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const double dxh = dy[n * C + c] * layer.gamma[c];
      if (cache.mode == Mode::Inference)
        out[n * C + c] = dxh * cache.scale[c];
      else if (cache.clamped[c]) // normalizer is constant
        out[n * C + c] = (dxh - sum_dxh[c] * inv_n) * cache.scale[c];
      else
        out[n * C + c] =
            cache.scale[c] * (dxh - sum_dxh[c] * inv_n - xh[n * C + c] * sum_dxh_xh[c] * inv_n);
    }
  return dx;
}

} // namespace loadcast
