#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nca {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

/// Dense tensor of 64-bit floats in row-major flat storage. Everything in this
/// codebase is rank 1 or 2; higher ranks round-trip through checkpoints but
/// have no math helpers.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::size_t rows, std::size_t cols) : Tensor(std::vector<std::size_t>{rows, cols}) {}

  static Tensor vector(std::size_t n) { return Tensor(std::vector<std::size_t>{n}); }
  static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }
  static Tensor from(std::initializer_list<double> values);
  static Tensor from_rows(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  /// Rank-2 Eigen view. Rank-1 tensors are viewed as a single row.
  MatMap mat();
  ConstMatMap mat() const;
  /// Flat Eigen view over all elements regardless of rank.
  VecMap vec() { return VecMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }
  ConstVecMap vec() const { return ConstVecMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }

  /// Row r of a rank-2 tensor as a span.
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void set_zero();
  void fill(double v);
  bool all_finite() const;
  double squared_norm() const;

  /// Same-shape zero tensor.
  Tensor like_zeros() const { return Tensor(shape_); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  std::vector<std::size_t> shape_;
  std::size_t cols_ = 0;  // trailing dimension, cached for operator()
  std::vector<double> data_;
};

/// Named reference to one parameter tensor inside a larger parameter struct.
/// Collections of these drive the optimizer, checkpoints and gradient checks.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};

std::string shape_string(const Tensor& t);

}  // namespace nca
