#pragma once

#include <functional>
#include <string>
#include <vector>

#include "loadcast/neural/batchnorm.hpp"
#include "loadcast/neural/dense.hpp"
#include "loadcast/neural/loss.hpp"
#include "loadcast/neural/lstm.hpp"

namespace loadcast {

/// Sizes of the forecaster. The defaults are the production layout; tests use
/// reduced variants (e.g. hidden 2/2 over a window of 6) for gradient checks.
struct ModelConfig {
  std::size_t input_steps = 48;
  std::size_t output_steps = 24;
  std::size_t features = 18;
  std::size_t hidden1 = 10;
  std::size_t hidden2 = 30;
  std::size_t dense_units = 10;

  void validate() const {
    if (input_steps == 0 || features == 0 || hidden1 == 0 || hidden2 == 0 || dense_units == 0)
      throw DimensionError("model config: sizes must be positive");
    if (output_steps == 0 || output_steps > input_steps)
      throw DimensionError("model config: output_steps must be in [1, input_steps]");
  }

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

/**
 * BiLSTM(h1) -> BatchNorm -> BiLSTM(h2) -> BatchNorm -> last `output_steps`
 * timesteps -> Dense(relu) -> Dense(relu) -> Dense(1, linear).
 *
 * With the default config the widths are 18 -> 20 -> 20 -> 60 -> 60 ->
 * (slice 24..47) -> 10 -> 10 -> 1.
 */
struct Model {
  ModelConfig config;
  BiLstmLayer bilstm1;
  BatchNormLayer batchnorm1;
  BiLstmLayer bilstm2;
  BatchNormLayer batchnorm2;
  DenseLayer dense1;
  DenseLayer dense2;
  DenseLayer output;

  /// All-zero weights, identity batch norm.
  static Model zeros(const ModelConfig &cfg) {
    cfg.validate();
    Model m;
    m.config = cfg;
    m.bilstm1 = BiLstmLayer::zeros(cfg.features, cfg.hidden1);
    m.batchnorm1 = BatchNormLayer::identity(2 * cfg.hidden1);
    m.bilstm2 = BiLstmLayer::zeros(2 * cfg.hidden1, cfg.hidden2);
    m.batchnorm2 = BatchNormLayer::identity(2 * cfg.hidden2);
    m.dense1 = DenseLayer::zeros(2 * cfg.hidden2, cfg.dense_units, Activation::Relu);
    m.dense2 = DenseLayer::zeros(cfg.dense_units, cfg.dense_units, Activation::Relu);
    m.output = DenseLayer::zeros(cfg.dense_units, 1, Activation::Linear);
    return m;
  }

  friend bool operator==(const Model &, const Model &) = default;
};

/// Gradients share the model's layout; only trainable tensors are meaningful.
using ModelGradients = Model;

inline ModelGradients zero_gradients(const Model &model) {
  ModelGradients g = Model::zeros(model.config);
  g.batchnorm1.gamma.fill(0.0);
  g.batchnorm2.gamma.fill(0.0);
  return g;
}

/// Calls f(name, tensor) for every tensor in a fixed order. Trainable tensors
/// come first within each layer; batch-norm running statistics are visited
/// only when include_state is set.
template <class M, class F>
void visit_tensors(M &model, F &&f, bool include_state) {
  auto lstm = [&](const std::string &p, auto &cell) {
    f(p + ".w_x", cell.w_x);
    f(p + ".w_h", cell.w_h);
    f(p + ".b", cell.b);
  };
  auto bn = [&](const std::string &p, auto &layer) {
    f(p + ".gamma", layer.gamma);
    f(p + ".beta", layer.beta);
    if (include_state) {
      f(p + ".running_mean", layer.running_mean);
      f(p + ".running_var", layer.running_var);
    }
  };
  auto dense = [&](const std::string &p, auto &layer) {
    f(p + ".w", layer.w);
    f(p + ".b", layer.b);
  };
  lstm("bilstm1.forward", model.bilstm1.forward);
  lstm("bilstm1.backward", model.bilstm1.backward);
  bn("batchnorm1", model.batchnorm1);
  lstm("bilstm2.forward", model.bilstm2.forward);
  lstm("bilstm2.backward", model.bilstm2.backward);
  bn("batchnorm2", model.batchnorm2);
  dense("dense1", model.dense1);
  dense("dense2", model.dense2);
  dense("output", model.output);
}

struct NamedTensor {
  std::string name;
  Tensor *tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor *tensor;
};

inline std::vector<NamedTensor> trainable_parameters(Model &model) {
  std::vector<NamedTensor> out;
  visit_tensors(model, [&](const std::string &n, Tensor &t) { out.push_back({n, &t}); }, false);
  return out;
}

inline std::vector<ConstNamedTensor> trainable_parameters(const Model &model) {
  std::vector<ConstNamedTensor> out;
  visit_tensors(model, [&](const std::string &n, const Tensor &t) { out.push_back({n, &t}); },
                false);
  return out;
}

inline std::size_t parameter_count(const Model &model) {
  std::size_t n = 0;
  for (const auto &p : trainable_parameters(model))
    n += p.tensor->size();
  return n;
}

inline void validate_model(const Model &m) {
  m.config.validate();
  m.bilstm1.validate("bilstm1");
  m.batchnorm1.validate("batchnorm1");
  m.bilstm2.validate("bilstm2");
  m.batchnorm2.validate("batchnorm2");
  m.dense1.validate("dense1");
  m.dense2.validate("dense2");
  m.output.validate("output");
  const ModelConfig &c = m.config;
  auto need = [](bool ok, const std::string &what) {
    if (!ok)
      throw DimensionError("model layout: " + what);
  };
  need(m.bilstm1.input() == c.features && m.bilstm1.hidden() == c.hidden1, "bilstm1 size");
  need(m.batchnorm1.channels() == 2 * c.hidden1, "batchnorm1 channels");
  need(m.bilstm2.input() == 2 * c.hidden1 && m.bilstm2.hidden() == c.hidden2, "bilstm2 size");
  need(m.batchnorm2.channels() == 2 * c.hidden2, "batchnorm2 channels");
  need(m.dense1.inputs() == 2 * c.hidden2 && m.dense1.outputs() == c.dense_units, "dense1 size");
  need(m.dense2.inputs() == c.dense_units && m.dense2.outputs() == c.dense_units, "dense2 size");
  need(m.output.inputs() == c.dense_units && m.output.outputs() == 1, "output size");
}

/// Intermediates of a forward pass needed by backward().
struct ForwardCache {
  BiLstmCache bilstm1;
  BatchNormCache batchnorm1;
  BiLstmCache bilstm2;
  BatchNormCache batchnorm2;
  Shape sliced_from; // (B, T, 2*h2) before the time slice
  DenseCache dense1;
  DenseCache dense2;
  DenseCache output;
  std::vector<std::string> warnings;
};

/// Keeps timesteps [T - steps, T) of x (B,T,C).
inline Tensor slice_last_steps(const Tensor &x, std::size_t steps) {
  expect_rank(x, 3, "slice input");
  const std::size_t B = x.dim(0), T = x.dim(1), C = x.dim(2);
  if (steps > T)
    throw DimensionError("slice: cannot keep " + std::to_string(steps) + " of " +
                         std::to_string(T) + " steps");
  Tensor y({B, steps, C});
  for (std::size_t b = 0; b < B; ++b)
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>((b * T + T - steps) * C),
                steps * C, y.data().begin() + static_cast<std::ptrdiff_t>(b * steps * C));
  return y;
}

/**
 * x (B, input_steps, features) -> (B, output_steps, 1).
 *
 * The model is not modified; in training mode the batch statistics are left
 * in the cache and applied with update_running_stats(Model&, ForwardCache&).
 */
inline Tensor model_forward(const Tensor &x, const Model &model, Mode mode,
                            ForwardCache *cache = nullptr) {
  const ModelConfig &c = model.config;
  expect_rank(x, 3, "model input");
  if (x.dim(1) != c.input_steps || x.dim(2) != c.features)
    throw DimensionError("model input: expected (B," + std::to_string(c.input_steps) + "," +
                         std::to_string(c.features) + "), got " + shape_str(x.shape()));
  if (!x.all_finite())
    throw DimensionError("model input contains non-finite values");

  ForwardCache local;
  ForwardCache &k = cache ? *cache : local;
  const bool keep = cache != nullptr;
  Tensor h = bilstm_forward_batch(x, model.bilstm1, keep ? &k.bilstm1 : nullptr);
  h = batchnorm_forward(h, model.batchnorm1, mode, &k.batchnorm1, &k.warnings);
  h = bilstm_forward_batch(h, model.bilstm2, keep ? &k.bilstm2 : nullptr);
  h = batchnorm_forward(h, model.batchnorm2, mode, &k.batchnorm2, &k.warnings);
  k.sliced_from = h.shape();
  h = slice_last_steps(h, c.output_steps);
  h = dense_forward(h, model.dense1, keep ? &k.dense1 : nullptr);
  h = dense_forward(h, model.dense2, keep ? &k.dense2 : nullptr);
  return dense_forward(h, model.output, keep ? &k.output : nullptr);
}

inline void update_running_stats(Model &model, const ForwardCache &cache) {
  update_running_stats(model.batchnorm1, cache.batchnorm1);
  update_running_stats(model.batchnorm2, cache.batchnorm2);
}

/// Full backward pass from dL/dprediction, including BPTT through both
/// bidirectional layers.
inline ModelGradients backward(const Model &model, const ForwardCache &cache,
                               const Tensor &d_pred) {
  ModelGradients g = zero_gradients(model);
  Tensor d = dense_backward(d_pred, model.output, cache.output, g.output);
  d = dense_backward(d, model.dense2, cache.dense2, g.dense2);
  d = dense_backward(d, model.dense1, cache.dense1, g.dense1);

  const std::size_t B = cache.sliced_from[0], T = cache.sliced_from[1], C = cache.sliced_from[2];
  const std::size_t S = model.config.output_steps;
  Tensor full(cache.sliced_from);
  for (std::size_t b = 0; b < B; ++b)
    std::copy_n(d.data().begin() + static_cast<std::ptrdiff_t>(b * S * C), S * C,
                full.data().begin() + static_cast<std::ptrdiff_t>((b * T + T - S) * C));

  d = batchnorm_backward(full, model.batchnorm2, cache.batchnorm2, g.batchnorm2);
  d = bilstm_backward_batch(d, model.bilstm2, cache.bilstm2, g.bilstm2);
  d = batchnorm_backward(d, model.batchnorm1, cache.batchnorm1, g.batchnorm1);
  bilstm_backward_batch(d, model.bilstm1, cache.bilstm1, g.bilstm1);
  return g;
}

struct LossAndGradients {
  double loss;
  ModelGradients gradients;
  ForwardCache cache;
};

/// Training-mode forward, MSE loss and gradients for one batch.
inline LossAndGradients loss_and_gradients(const Model &model, const Tensor &x,
                                           const Tensor &target) {
  LossAndGradients r{0.0, {}, {}};
  const Tensor pred = model_forward(x, model, Mode::Training, &r.cache);
  r.loss = mse_loss(pred, target);
  r.gradients = backward(model, r.cache, mse_gradient(pred, target));
  return r;
}

} // namespace loadcast
