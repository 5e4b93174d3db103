#pragma once

#include "loadcast/neural/tensor.hpp"

namespace loadcast {

/// Mean of squared differences over every element.
inline double mse_loss(const Tensor &pred, const Tensor &target) {
  expect_shape(target, pred.shape(), "mse target");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

inline Tensor mse_gradient(const Tensor &pred, const Tensor &target) {
  expect_shape(target, pred.shape(), "mse target");
  Tensor g(pred.shape());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    g[i] = scale * (pred[i] - target[i]);
  return g;
}

} // namespace loadcast
