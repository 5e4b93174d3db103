#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "loadcast/neural/model.hpp"

namespace loadcast {

namespace detail {

inline void glorot_uniform(Tensor &w, std::size_t fan_in, std::size_t fan_out,
                           std::mt19937_64 &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double &v : w.data())
    v = dist(rng);
}

inline void init_cell(LstmCellParams &cell, std::mt19937_64 &rng) {
  const std::size_t h = cell.hidden();
  glorot_uniform(cell.w_x, cell.input(), 4 * h, rng);
  glorot_uniform(cell.w_h, h, 4 * h, rng);
  cell.b.fill(0.0);
  const std::size_t f = cell.gate_offset(Gate::Forget);
  for (std::size_t k = 0; k < h; ++k)
    cell.b[f + k] = 1.0;
}

} // namespace detail

/// Glorot-uniform kernels (input and recurrent), zero biases except the
/// forget-gate slice, identity batch norm. Deterministic in `seed`.
inline Model init_weights(const ModelConfig &config, std::uint64_t seed) {
  Model m = Model::zeros(config);
  std::mt19937_64 rng(seed);
  detail::init_cell(m.bilstm1.forward, rng);
  detail::init_cell(m.bilstm1.backward, rng);
  detail::init_cell(m.bilstm2.forward, rng);
  detail::init_cell(m.bilstm2.backward, rng);
  for (DenseLayer *d : {&m.dense1, &m.dense2, &m.output})
    detail::glorot_uniform(d->w, d->inputs(), d->outputs(), rng);
  return m;
}

} // namespace loadcast
