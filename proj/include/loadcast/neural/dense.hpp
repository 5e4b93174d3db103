#pragma once

#include <string>

#include "loadcast/neural/tensor.hpp"

namespace loadcast {

enum class Activation { Relu, Linear };

/// Fully connected layer applied independently to every timestep.
struct DenseLayer {
  Tensor w; // (out, in)
  Tensor b; // (out)
  Activation activation = Activation::Linear;

  static DenseLayer zeros(std::size_t in, std::size_t out, Activation act) {
    return {Tensor({out, in}), Tensor({out}), act};
  }

  std::size_t inputs() const { return w.dim(1); }
  std::size_t outputs() const { return w.dim(0); }

  void validate(const std::string &name) const {
    expect_rank(w, 2, name + ".w");
    expect_shape(b, {w.dim(0)}, name + ".b");
  }

  friend bool operator==(const DenseLayer &, const DenseLayer &) = default;
};

struct DenseCache {
  Tensor input;  // (B, T, in)
  Tensor output; // (B, T, out), post-activation
};

inline Tensor dense_forward(const Tensor &x, const DenseLayer &layer, DenseCache *cache = nullptr) {
  expect_rank(x, 3, "dense input");
  if (x.dim(2) != layer.inputs())
    throw DimensionError("dense input: expected width " + std::to_string(layer.inputs()) +
                         ", got shape " + shape_str(x.shape()));
  Tensor y({x.dim(0), x.dim(1), layer.outputs()});
  MatrixMap ym = as_matrix(y);
  ym.noalias() = as_matrix(x) * as_matrix(layer.w).transpose();
  ym.rowwise() += as_vector(layer.b).transpose();
  if (layer.activation == Activation::Relu)
    ym = ym.cwiseMax(0.0);
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

inline Tensor dense_backward(const Tensor &dout, const DenseLayer &layer, const DenseCache &cache,
                             DenseLayer &grad) {
  expect_shape(dout, cache.output.shape(), "dense output gradient");
  RowMatrix dz = as_matrix(dout);
  if (layer.activation == Activation::Relu)
    dz = (as_matrix(cache.output).array() > 0.0).select(dz, 0.0);
  as_matrix(grad.w).noalias() += dz.transpose() * as_matrix(cache.input);
  as_vector(grad.b) += dz.colwise().sum().transpose();
  Tensor dx(cache.input.shape());
  as_matrix(dx).noalias() = dz * as_matrix(layer.w);
  return dx;
}

} // namespace loadcast
