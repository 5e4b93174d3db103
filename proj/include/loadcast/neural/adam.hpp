#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "loadcast/neural/model.hpp"

namespace loadcast {

/// First/second moment estimates for every trainable tensor, in
/// trainable_parameters() order.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_model(const Model &model) {
    AdamState s;
    for (const auto &p : trainable_parameters(model)) {
      s.m.emplace_back(p.tensor->shape());
      s.v.emplace_back(p.tensor->shape());
    }
    return s;
  }
};

/**
 * One bias-corrected Adam update over parallel lists of parameters and
 * gradients. Every gradient is checked for NaN/Inf before anything is
 * modified.
 */
inline void adam_step(std::span<Tensor *const> params, std::span<const Tensor *const> grads,
                      const std::vector<std::string> &names, AdamState &state, double lr) {
  if (!(lr > 0.0))
    throw Error("adam: learning rate must be positive");
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimensionError("adam: parameter/gradient/state counts differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    expect_shape(*grads[i], params[i]->shape(), names[i] + " gradient");
    if (!grads[i]->all_finite())
      throw NonFiniteGradientError(names[i]);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor &p = *params[i];
    const Tensor &g = *grads[i];
    Tensor &m = state.m[i];
    Tensor &v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

inline void adam_step(Model &model, const ModelGradients &grads, AdamState &state, double lr) {
  std::vector<Tensor *> params;
  std::vector<const Tensor *> gs;
  std::vector<std::string> names;
  for (const auto &p : trainable_parameters(model)) {
    params.push_back(p.tensor);
    names.push_back(p.name);
  }
  for (const auto &g : trainable_parameters(grads))
    gs.push_back(g.tensor);
  adam_step(params, gs, names, state, lr);
}

} // namespace loadcast
