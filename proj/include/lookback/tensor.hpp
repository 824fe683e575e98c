#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "lookback/common.hpp"

namespace lookback {

// Dense row-major tensor with value semantics. All model state, activations
// and gradients use this type; Eigen maps provide the GEMM paths.
template <typename T>
class Tensor {
 public:
  using Scalar = T;
  using Shape = std::vector<std::int64_t>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(checked_numel(shape_), T(0)) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check(static_cast<std::int64_t>(data_.size()) == checked_numel(shape_), ErrorKind::runtime,
          "tensor data size does not match shape");
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }
  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t dim(std::int64_t i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // 2-d / 4-d indexing for readability in kernels; row-major strides.
  T& at(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  const T& at(std::int64_t i, std::int64_t j) const {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  const T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  Tensor reshaped(Shape new_shape) const {
    check(checked_numel(new_shape) == numel(), ErrorKind::runtime, "reshape changes element count");
    Tensor out = *this;
    out.shape_ = std::move(new_shape);
    return out;
  }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Map = Eigen::Map<MatrixRM>;
  using ConstMap = Eigen::Map<const MatrixRM>;
  using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
  using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

  Map mat(std::int64_t rows, std::int64_t cols) { return Map(data(), rows, cols); }
  ConstMap mat(std::int64_t rows, std::int64_t cols) const { return ConstMap(data(), rows, cols); }
  VecMap flat() { return VecMap(data(), numel()); }
  ConstVecMap flat() const { return ConstVecMap(data(), numel()); }

  static std::string shape_string(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
  }

 private:
  static std::int64_t checked_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
      check(d >= 0, ErrorKind::runtime, "negative tensor dimension");
      n *= d;
    }
    return n;
  }

  Shape shape_;
  std::vector<T> data_;
};

}  // namespace lookback
