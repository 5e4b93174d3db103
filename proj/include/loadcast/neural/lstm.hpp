#pragma once

#include <cmath>
#include <string>

#include "loadcast/neural/tensor.hpp"

namespace loadcast {

/// Gate blocks inside the stacked 4H rows of every LSTM weight and bias.
/// The order is part of the checkpoint format and must not change.
enum class Gate : std::size_t { Input = 0, Forget = 1, Candidate = 2, Output = 3 };

/**
 * Weights of one unidirectional LSTM cell.
 *
 * Rows of w_x, w_h and b are four stacked blocks of `hidden` rows in the
 * order [input, forget, cell-candidate, output]:
 *
 *   i = sigmoid(W_x[i] x + W_h[i] h + b[i])
 *   f = sigmoid(W_x[f] x + W_h[f] h + b[f])
 *   g = tanh   (W_x[g] x + W_h[g] h + b[g])
 *   o = sigmoid(W_x[o] x + W_h[o] h + b[o])
 *   c' = f*c + i*g,  h' = o*tanh(c')
 */
struct LstmCellParams {
  Tensor w_x; // (4H, D)
  Tensor w_h; // (4H, H)
  Tensor b;   // (4H)

  static LstmCellParams zeros(std::size_t input, std::size_t hidden) {
    return {Tensor({4 * hidden, input}), Tensor({4 * hidden, hidden}), Tensor({4 * hidden})};
  }

  std::size_t hidden() const { return w_h.dim(1); }
  std::size_t input() const { return w_x.dim(1); }

  void validate(const std::string &name) const {
    expect_rank(w_h, 2, name + ".w_h");
    const std::size_t h = w_h.dim(1);
    expect_shape(w_h, {4 * h, h}, name + ".w_h");
    expect_rank(w_x, 2, name + ".w_x");
    expect_shape(w_x, {4 * h, w_x.dim(1)}, name + ".w_x");
    expect_shape(b, {4 * h}, name + ".b");
  }

  /// Row range [begin, begin+H) of one gate block.
  std::size_t gate_offset(Gate g) const { return static_cast<std::size_t>(g) * hidden(); }

  friend bool operator==(const LstmCellParams &, const LstmCellParams &) = default;
};

/// Two cells with opposing time directions; output width 2H.
struct BiLstmLayer {
  LstmCellParams forward;
  LstmCellParams backward;

  static BiLstmLayer zeros(std::size_t input, std::size_t hidden) {
    return {LstmCellParams::zeros(input, hidden), LstmCellParams::zeros(input, hidden)};
  }

  std::size_t hidden() const { return forward.hidden(); }
  std::size_t input() const { return forward.input(); }
  std::size_t output_width() const { return 2 * hidden(); }

  void validate(const std::string &name) const {
    forward.validate(name + ".forward");
    backward.validate(name + ".backward");
    if (forward.hidden() != backward.hidden() || forward.input() != backward.input())
      throw DimensionError(name + ": forward and backward cells differ in size");
  }

  friend bool operator==(const BiLstmLayer &, const BiLstmLayer &) = default;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace detail

struct CellState {
  Tensor h;
  Tensor c;
};

/// One step of a single cell on unbatched vectors.
inline CellState lstm_cell_forward(const Tensor &x, const Tensor &h_prev, const Tensor &c_prev,
                                   const LstmCellParams &p) {
  p.validate("params");
  const std::size_t hid = p.hidden();
  expect_shape(x, {p.input()}, "x_t");
  expect_shape(h_prev, {hid}, "h_prev");
  expect_shape(c_prev, {hid}, "c_prev");

  Eigen::VectorXd z = as_matrix(p.w_x) * as_vector(x) + as_matrix(p.w_h) * as_vector(h_prev) +
                      as_vector(p.b);
  CellState out{Tensor({hid}), Tensor({hid})};
  for (std::size_t k = 0; k < hid; ++k) {
    const double i = detail::sigmoid(z(k));
    const double f = detail::sigmoid(z(hid + k));
    const double g = std::tanh(z(2 * hid + k));
    const double o = detail::sigmoid(z(3 * hid + k));
    out.c[k] = f * c_prev[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

/// Activations saved by one direction for backpropagation through time.
struct LstmDirectionCache {
  Tensor gates;     // (B, T, 4H) post-activation i, f, g, o
  Tensor cell;      // (B, T, H)
  Tensor cell_tanh; // (B, T, H)
};

struct BiLstmCache {
  Tensor input;  // (B, T, D)
  Tensor output; // (B, T, 2H)
  LstmDirectionCache forward;
  LstmDirectionCache backward;
};

namespace detail {

template <class Block> void sigmoid_inplace(Block &&z) {
  z = (1.0 + (-z).exp()).inverse();
}

// tanh(z) = 2 sigmoid(2z) - 1, which vectorizes through exp.
template <class Block> void tanh_inplace(Block &&z) {
  z = 2.0 * (1.0 + (-2.0 * z).exp()).inverse() - 1.0;
}

// Runs one direction over x (B,T,D) and writes h into columns [col, col+H) of out (B,T,W).
inline void lstm_direction_forward(const Tensor &x, const LstmCellParams &p, bool reverse,
                                   Tensor &out, std::size_t col, LstmDirectionCache *cache) {
  const auto B = static_cast<Eigen::Index>(x.dim(0));
  const auto T = static_cast<Eigen::Index>(x.dim(1));
  const auto H = static_cast<Eigen::Index>(p.hidden());
  const Eigen::Index G = 4 * H;
  const auto W = static_cast<Eigen::Index>(out.dim(2));

  RowMatrix zx = as_matrix(x) * as_matrix(p.w_x).transpose();
  zx.rowwise() += as_vector(p.b).transpose();
  const ConstMatrixMap wh = as_matrix(p.w_h);

  if (cache) {
    cache->gates = Tensor({x.dim(0), x.dim(1), static_cast<std::size_t>(G)});
    cache->cell = Tensor({x.dim(0), x.dim(1), static_cast<std::size_t>(H)});
    cache->cell_tanh = Tensor({x.dim(0), x.dim(1), static_cast<std::size_t>(H)});
  }

  RowMatrix h = RowMatrix::Zero(B, H);
  RowMatrix c = RowMatrix::Zero(B, H);
  RowMatrix tc(B, H);
  RowMatrix z(B, G);
  for (Eigen::Index s = 0; s < T; ++s) {
    const Eigen::Index t = reverse ? T - 1 - s : s;
    z = ConstStridedMap(zx.data() + t * G, B, G, Eigen::OuterStride<>(T * G));
    if (s > 0)
      z.noalias() += h * wh.transpose();
    sigmoid_inplace(z.leftCols(2 * H).array());
    tanh_inplace(z.middleCols(2 * H, H).array());
    sigmoid_inplace(z.rightCols(H).array());
    c.array() = z.middleCols(H, H).array() * c.array() +
                z.leftCols(H).array() * z.middleCols(2 * H, H).array();
    tc = c;
    tanh_inplace(tc.array());
    h.array() = z.rightCols(H).array() * tc.array();

    StridedMap(out.data().data() + t * W + static_cast<Eigen::Index>(col), B, H,
               Eigen::OuterStride<>(T * W)) = h;
    if (cache) {
      StridedMap(cache->gates.data().data() + t * G, B, G, Eigen::OuterStride<>(T * G)) = z;
      StridedMap(cache->cell.data().data() + t * H, B, H, Eigen::OuterStride<>(T * H)) = c;
      StridedMap(cache->cell_tanh.data().data() + t * H, B, H, Eigen::OuterStride<>(T * H)) = tc;
    }
  }
}

// Backpropagation through time for one direction. Accumulates into grad and dx.
// `out` is the layer output holding this direction's hidden states at `col`.
inline void lstm_direction_backward(const Tensor &dout, const Tensor &out, std::size_t col,
                                    const LstmCellParams &p, const Tensor &x,
                                    const LstmDirectionCache &cache, bool reverse,
                                    LstmCellParams &grad, Tensor &dx) {
  const auto B = static_cast<Eigen::Index>(x.dim(0));
  const auto T = static_cast<Eigen::Index>(x.dim(1));
  const auto H = static_cast<Eigen::Index>(p.hidden());
  const Eigen::Index G = 4 * H;
  const auto W = static_cast<Eigen::Index>(dout.dim(2));
  const auto C = static_cast<Eigen::Index>(col);
  const ConstMatrixMap wh = as_matrix(p.w_h);
  const Eigen::OuterStride<> gate_stride(T * G), h_stride(T * H), w_stride(T * W);

  RowMatrix dz_all(B * T, G);
  // h_{prev}(b, t) aligned with dz_all rows; zero where no previous step exists.
  RowMatrix h_prev_all = RowMatrix::Zero(B * T, H);
  RowMatrix dh = RowMatrix::Zero(B, H);
  RowMatrix dc_next = RowMatrix::Zero(B, H);
  RowMatrix dc(B, H);
  RowMatrix dz(B, G);

  for (Eigen::Index s = T - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? T - 1 - s : s;
    const Eigen::Index tp = reverse ? t + 1 : t - 1;
    const ConstStridedMap gates(cache.gates.data().data() + t * G, B, G, gate_stride);
    const ConstStridedMap tc(cache.cell_tanh.data().data() + t * H, B, H, h_stride);
    const auto i = gates.leftCols(H).array();
    const auto f = gates.middleCols(H, H).array();
    const auto g = gates.middleCols(2 * H, H).array();
    const auto o = gates.rightCols(H).array();

    dh += ConstStridedMap(dout.data().data() + t * W + C, B, H, w_stride);
    dc.array() = dh.array() * o * (1.0 - tc.array().square()) + dc_next.array();
    dc_next.array() = dc.array() * f;
    dz.leftCols(H).array() = dc.array() * g * i * (1.0 - i);
    if (s > 0) {
      const ConstStridedMap c_prev(cache.cell.data().data() + tp * H, B, H, h_stride);
      dz.middleCols(H, H).array() = dc.array() * c_prev.array() * f * (1.0 - f);
    } else {
      dz.middleCols(H, H).setZero();
    }
    dz.middleCols(2 * H, H).array() = dc.array() * i * (1.0 - g.square());
    dz.rightCols(H).array() = dh.array() * tc.array() * o * (1.0 - o);

    StridedMap(dz_all.data() + t * G, B, G, gate_stride) = dz;
    if (s > 0) {
      StridedMap(h_prev_all.data() + t * H, B, H, h_stride) =
          ConstStridedMap(out.data().data() + tp * W + C, B, H, w_stride);
      dh.noalias() = dz * wh;
    }
  }
  as_matrix(grad.w_h).noalias() += dz_all.transpose() * h_prev_all;
  as_matrix(grad.w_x).noalias() += dz_all.transpose() * as_matrix(x);
  as_vector(grad.b) += dz_all.colwise().sum().transpose();
  as_matrix(dx).noalias() += dz_all * as_matrix(p.w_x);
}

} // namespace detail

/// Batched bidirectional pass: x (B,T,D) -> (B,T,2H). Columns [0,H) hold the
/// forward direction, [H,2H) the backward direction at the same time index.
inline Tensor bilstm_forward_batch(const Tensor &x, const BiLstmLayer &layer,
                                   BiLstmCache *cache = nullptr) {
  expect_rank(x, 3, "bilstm input");
  if (x.dim(2) != layer.input())
    throw DimensionError("bilstm input: expected feature width " +
                         std::to_string(layer.input()) + ", got shape " + shape_str(x.shape()));
  const std::size_t H = layer.hidden();
  Tensor out({x.dim(0), x.dim(1), 2 * H});
  detail::lstm_direction_forward(x, layer.forward, false, out, 0,
                                 cache ? &cache->forward : nullptr);
  detail::lstm_direction_forward(x, layer.backward, true, out, H,
                                 cache ? &cache->backward : nullptr);
  if (cache) {
    cache->input = x;
    cache->output = out;
  }
  return out;
}

/// Backward of bilstm_forward_batch. Accumulates parameter gradients into
/// `grad` and returns dL/dx.
inline Tensor bilstm_backward_batch(const Tensor &dout, const BiLstmLayer &layer,
                                    const BiLstmCache &cache, BiLstmLayer &grad) {
  const Tensor &x = cache.input;
  expect_shape(dout, {x.dim(0), x.dim(1), layer.output_width()}, "bilstm output gradient");
  Tensor dx(x.shape());
  detail::lstm_direction_backward(dout, cache.output, 0, layer.forward, x, cache.forward, false,
                                  grad.forward, dx);
  detail::lstm_direction_backward(dout, cache.output, layer.hidden(), layer.backward, x,
                                  cache.backward, true, grad.backward, dx);
  return dx;
}

/// Unbatched convenience: x (T,D) -> (T,2H).
inline Tensor bilstm_forward(const Tensor &x, const BiLstmLayer &layer) {
  layer.validate("layer");
  expect_rank(x, 2, "bilstm input");
  Tensor y = bilstm_forward_batch(x.reshaped({1, x.dim(0), x.dim(1)}), layer);
  return y.reshaped({x.dim(0), layer.output_width()});
}

} // namespace loadcast
