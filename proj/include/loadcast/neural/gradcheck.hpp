#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "loadcast/neural/init.hpp"
#include "loadcast/neural/model.hpp"

namespace loadcast {

struct GradcheckOptions {
  ModelConfig config{6, 3, 18, 2, 2, 10}; // window 6, hidden 2/2
  std::size_t batch = 3;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Test hook: scale one analytic gradient entry to prove the check bites.
  bool corrupt_gradient = false;
};

struct TensorGradcheck {
  std::string name;
  std::size_t worst_index = 0;
  double max_rel_error = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradcheckReport {
  std::vector<TensorGradcheck> tensors;
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
  bool passed = false;
};

/// |analytic - numeric| / max(1e-8, |numeric|)
inline double gradcheck_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric));
}

/**
 * Compares every analytic gradient of a randomly initialized reduced model
 * against central finite differences of the training-mode MSE loss.
 */
inline GradcheckReport run_gradcheck(std::uint64_t seed, const GradcheckOptions &opt = {}) {
  Model model = init_weights(opt.config, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  // Move biases and batch-norm affine terms off their structured init values.
  for (const auto &p : trainable_parameters(model))
    if (p.name.ends_with(".b") || p.name.ends_with(".beta"))
      for (double &v : p.tensor->data())
        v += uni(rng);
    else if (p.name.ends_with(".gamma"))
      for (double &v : p.tensor->data())
        v = 1.0 + uni(rng);

  const ModelConfig &c = opt.config;
  Tensor x({opt.batch, c.input_steps, c.features});
  for (double &v : x.data())
    v = normal(rng);
  Tensor y({opt.batch, c.output_steps, 1});
  for (double &v : y.data())
    v = normal(rng);

  LossAndGradients analytic = loss_and_gradients(model, x, y);
  auto grads = trainable_parameters(analytic.gradients);
  if (opt.corrupt_gradient)
    (*grads.front().tensor)[0] = (*grads.front().tensor)[0] * 1.01 + 1e-3;

  auto loss_at = [&](const Model &m) { return mse_loss(model_forward(x, m, Mode::Training), y); };

  GradcheckReport report;
  auto params = trainable_parameters(model);
  for (std::size_t p = 0; p < params.size(); ++p) {
    TensorGradcheck tc{params[p].name};
    Tensor &w = *params[p].tensor;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + opt.step;
      const double up = loss_at(model);
      w[i] = orig - opt.step;
      const double down = loss_at(model);
      w[i] = orig;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double a = (*grads[p].tensor)[i];
      const double rel = gradcheck_relative_error(a, numeric);
      if (rel >= tc.max_rel_error) {
        tc.max_rel_error = rel;
        tc.worst_index = i;
        tc.analytic = a;
        tc.numeric = numeric;
      }
      ++report.checked;
    }
    if (tc.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = tc.max_rel_error;
      report.worst_parameter = tc.name;
    }
    report.tensors.push_back(tc);
  }
  report.passed = report.max_rel_error < opt.tolerance;
  return report;
}

} // namespace loadcast
