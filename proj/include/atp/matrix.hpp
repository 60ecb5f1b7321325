#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace atp {

// Dense row-major matrix of doubles. Table permutation work never exceeds a
// few dozen rows, so there is no point in reaching for BLAS here.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Mat& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Mat& operator+=(const Mat& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Mat& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

  void require_same_shape(const Mat& other) const {
    if (!same_shape(other)) throw std::invalid_argument("matrix shape mismatch");
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline bool all_finite(const Mat& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) return false;
  }
  return true;
}

inline double frobenius_dot(const Mat& a, const Mat& b) {
  a.require_same_shape(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

// C = A * B
inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

// Largest deviation of any row or column sum from 1, plus how far entries
// stray outside [0, 1]. Used to validate doubly stochastic matrices.
inline double doubly_stochastic_deviation(const Mat& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  double dev = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      rs += v;
      if (v < 0.0) dev = std::max(dev, -v);
      if (v > 1.0) dev = std::max(dev, v - 1.0);
    }
    dev = std::max(dev, std::abs(rs - 1.0));
  }
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double cs = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) cs += m(i, j);
    dev = std::max(dev, std::abs(cs - 1.0));
  }
  return dev;
}

inline constexpr double kDoublyStochasticTol = 1e-4;

inline bool is_doubly_stochastic(const Mat& m, double tol = kDoublyStochasticTol) {
  return m.rows() == m.cols() && all_finite(m) && doubly_stochastic_deviation(m) <= tol;
}

}  // namespace atp
