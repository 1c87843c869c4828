#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "drl/errors.hpp"

namespace drl {

/// Dense tensor of 64-bit reals in row-major order. Rank 1 and 2 cover
/// everything in this library; a scalar is shape {1}. Zero-sized axes are
/// legal (they appear in edge cases like concatenating an n x 0 block).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
  }

  static Tensor ones(std::vector<std::size_t> shape) { return full(std::move(shape), 1.0); }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  /// Column vector {n, 1} from a flat sequence.
  static Tensor column(const std::vector<double>& v) {
    return Tensor({v.size(), 1}, v);
  }

  static Tensor vector(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({n}, std::move(v));
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return data_.size(); }

  std::size_t rows() const {
    require_rank2("rows()");
    return shape_[0];
  }
  std::size_t cols() const {
    require_rank2("cols()");
    return shape_[1];
  }

  double& operator()(std::size_t i, std::size_t j) {
    require_rank2("operator()(i,j)");
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    require_rank2("operator()(i,j)");
    return data_[i * shape_[1] + j];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double scalar_value() const {
    if (numel() != 1) {
      throw ContractError("scalar_value() on tensor of shape " + shape_string(shape_));
    }
    return data_[0];
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  bool all_finite() const noexcept {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  /// i-th row of a rank-2 tensor as a flat copy.
  std::vector<double> row(std::size_t i) const {
    require_rank2("row()");
    const std::size_t c = shape_[1];
    return std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(i * c),
                               data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
  }

  /// Rows of a rank-2 tensor selected by index, in the given order.
  Tensor take_rows(const std::vector<std::size_t>& idx) const {
    require_rank2("take_rows()");
    Tensor out({idx.size(), shape_[1]});
    const std::size_t c = shape_[1];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t j = 0; j < c; ++j) out.data_[k * c + j] = data_[idx[k] * c + j];
    }
    return out;
  }

  static std::string shape_string(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
  }

  std::string shape_string() const { return shape_string(shape_); }

 private:
  static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return shape.empty() ? 0 : n;
  }

  void require_rank2(const char* what) const {
    if (shape_.size() != 2) {
      throw ContractError(std::string(what) + " requires rank-2 tensor, got " +
                          shape_string(shape_));
    }
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace drl
