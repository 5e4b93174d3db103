#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "loadcast/error.hpp"

namespace loadcast {

using Shape = std::vector<std::size_t>;
// 64-byte aligned so Eigen picks the same kernel path on every allocation.
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

inline std::string shape_str(const Shape &shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

inline std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

/**
 * Dense row-major array of doubles with an explicit shape.
 *
 * Every dimension is positive and data().size() == product(shape). The
 * class is a plain value type; copies are deep.
 */
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, const std::vector<double> &data)
      : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}

  Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != shape_size(shape_))
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
  }

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  Storage &values() noexcept { return data_; }
  const Storage &values() const noexcept { return data_; }
  std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double &at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double &at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v))
        return false;
    return true;
  }

  /// Same data, new shape of equal element count.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  friend bool operator==(const Tensor &, const Tensor &) = default;

private:
  void validate_shape() const {
    if (shape_.empty())
      throw DimensionError("tensor shape must have at least one dimension");
    for (std::size_t d : shape_)
      if (d == 0)
        throw DimensionError("tensor shape " + shape_str(shape_) +
                             " has a zero dimension");
  }

  Shape shape_;
  Storage data_;
};

inline void expect_shape(const Tensor &t, const Shape &expected, const std::string &name) {
  if (t.shape() != expected)
    throw DimensionError(name + ": expected shape " + shape_str(expected) + ", got " +
                         shape_str(t.shape()));
}

inline void expect_rank(const Tensor &t, std::size_t rank, const std::string &name) {
  if (t.rank() != rank)
    throw DimensionError(name + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_str(t.shape()));
}

// Eigen views over tensor storage.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// View a tensor as rows x cols, where cols is the last dimension.
inline MatrixMap as_matrix(Tensor &t) {
  const auto cols = static_cast<Eigen::Index>(t.shape().back());
  return MatrixMap(t.data().data(), static_cast<Eigen::Index>(t.size()) / cols, cols);
}
inline ConstMatrixMap as_matrix(const Tensor &t) {
  const auto cols = static_cast<Eigen::Index>(t.shape().back());
  return ConstMatrixMap(t.data().data(), static_cast<Eigen::Index>(t.size()) / cols, cols);
}
inline VectorMap as_vector(Tensor &t) {
  return VectorMap(t.data().data(), static_cast<Eigen::Index>(t.size()));
}
inline ConstVectorMap as_vector(const Tensor &t) {
  return ConstVectorMap(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

} // namespace loadcast
