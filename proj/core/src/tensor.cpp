#include "attnca/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nca {

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (std::size_t d : shape_) n *= d;
  if (shape_.empty()) n = 0;
  cols_ = shape_.empty() ? 0 : shape_.back();
  data_.assign(n, 0.0);
}

Tensor Tensor::from(std::initializer_list<double> values) {
  Tensor t(std::vector<std::size_t>{values.size()});
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

Tensor Tensor::from_rows(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  if (values.size() != rows * cols) throw std::invalid_argument("from_rows: element count mismatch");
  Tensor t(rows, cols);
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() == 1) return 1;
  throw std::logic_error("rows(): tensor rank " + std::to_string(rank()));
}

std::size_t Tensor::cols() const {
  if (rank() == 1 || rank() == 2) return cols_;
  throw std::logic_error("cols(): tensor rank " + std::to_string(rank()));
}

MatMap Tensor::mat() {
  return MatMap(data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

ConstMatMap Tensor::mat() const {
  return ConstMatMap(data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

void Tensor::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

std::string shape_string(const Tensor& t) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < t.shape().size(); ++i) {
    if (i) os << 'x';
    os << t.shape()[i];
  }
  os << ']';
  return os.str();
}

}  // namespace nca
