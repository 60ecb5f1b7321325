#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "atp/matrix.hpp"

namespace atp {

namespace detail {

inline double log_sum_exp(const double* vals, std::size_t n, std::size_t stride) {
  double m = vals[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, vals[i * stride]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(vals[i * stride] - m);
  return m + std::log(s);
}

// One normalization sweep in the log domain. Subtracting the row (column)
// log-sum-exp is exactly dividing by the row (column) sum of exp.
inline void log_normalize_rows(Mat& L) {
  for (std::size_t i = 0; i < L.rows(); ++i) {
    const double lse = log_sum_exp(&L(i, 0), L.cols(), 1);
    for (std::size_t j = 0; j < L.cols(); ++j) L(i, j) -= lse;
  }
}

inline void log_normalize_cols(Mat& L) {
  for (std::size_t j = 0; j < L.cols(); ++j) {
    const double lse = log_sum_exp(&L(0, j), L.rows(), L.cols());
    for (std::size_t i = 0; i < L.rows(); ++i) L(i, j) -= lse;
  }
}

// Log-domain states of the unrolled iteration, kept for reverse mode.
struct SinkhornTape {
  std::vector<Mat> after_row;  // log matrix after each row normalization
  std::vector<Mat> after_col;  // log matrix after the following column normalization
};

inline Mat sinkhorn_log(const Mat& theta, int iterations, SinkhornTape* tape) {
  if (theta.rows() != theta.cols()) throw std::invalid_argument("sinkhorn: square matrix required");
  if (iterations < 1) throw std::invalid_argument("sinkhorn: iterations must be >= 1");
  if (!all_finite(theta)) throw std::invalid_argument("sinkhorn: non-finite entries");
  Mat L = theta;
  if (L.rows() <= 1) {
    // 0x0 and 1x1 are already fixed points ([[1.0]] for 1x1).
    if (L.rows() == 1) L(0, 0) = 0.0;
    return L;
  }
  for (int it = 0; it < iterations; ++it) {
    log_normalize_rows(L);
    if (tape) tape->after_row.push_back(L);
    log_normalize_cols(L);
    if (tape) tape->after_col.push_back(L);
  }
  return L;
}

}  // namespace detail

// Truncated Sinkhorn normalization of exp(theta), computed in the log domain:
// `iterations` rounds of row normalization followed by column normalization.
// Column sums of the result are 1 up to rounding; row sums approach 1 as the
// iteration count grows.
inline Mat sinkhorn(const Mat& theta, int iterations) {
  Mat L = detail::sinkhorn_log(theta, iterations, nullptr);
  Mat out(L.rows(), L.cols());
  for (std::size_t i = 0; i < L.rows(); ++i)
    for (std::size_t j = 0; j < L.cols(); ++j) out(i, j) = std::exp(L(i, j));
  return out;
}

// Gradient of <upstream_grad, sinkhorn(theta)> with respect to theta, obtained
// by reversing the unrolled normalization steps. Must be called with the same
// iteration count as the forward pass it differentiates.
inline Mat sinkhorn_backward(const Mat& theta, int iterations, const Mat& upstream_grad) {
  theta.require_same_shape(upstream_grad);
  if (theta.rows() <= 1) return Mat(theta.rows(), theta.cols(), 0.0);

  detail::SinkhornTape tape;
  Mat L = detail::sinkhorn_log(theta, iterations, &tape);

  const std::size_t n = theta.rows();
  // d/dL of <G, exp(L)> = G .* exp(L).
  Mat g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g(i, j) = upstream_grad(i, j) * std::exp(L(i, j));

  // Backward through L(i,j) -= lse(column j) is
  //   g(i,j) -= softmax_col(i,j) * sum_i' g(i',j)
  // where softmax_col == exp(output of the step); row steps are symmetric.
  for (int it = iterations - 1; it >= 0; --it) {
    const Mat& col_out = tape.after_col[static_cast<std::size_t>(it)];
    for (std::size_t j = 0; j < n; ++j) {
      double colsum = 0.0;
      for (std::size_t i = 0; i < n; ++i) colsum += g(i, j);
      for (std::size_t i = 0; i < n; ++i) g(i, j) -= std::exp(col_out(i, j)) * colsum;
    }
    const Mat& row_out = tape.after_row[static_cast<std::size_t>(it)];
    for (std::size_t i = 0; i < n; ++i) {
      double rowsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) rowsum += g(i, j);
      for (std::size_t j = 0; j < n; ++j) g(i, j) -= std::exp(row_out(i, j)) * rowsum;
    }
  }
  return g;
}

// Embed an n x n doubly stochastic matrix as the lower-right block of an
// (n+1) x (n+1) matrix whose first row and column pin index 0 in place.
inline Mat lift_header_fixed(const Mat& d) {
  if (d.rows() != d.cols()) throw std::invalid_argument("lift_header_fixed: square input required");
  Mat out(d.rows() + 1, d.cols() + 1);
  out(0, 0) = 1.0;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j) out(i + 1, j + 1) = d(i, j);
  return out;
}

inline bool is_header_fixed(const Mat& d, double tol = 1e-6) {
  if (d.rows() != d.cols() || d.rows() == 0) return false;
  if (std::abs(d(0, 0) - 1.0) > tol) return false;
  for (std::size_t k = 1; k < d.rows(); ++k) {
    if (std::abs(d(0, k)) > tol || std::abs(d(k, 0)) > tol) return false;
  }
  return true;
}

// -sum d_ij log d_ij with the 0 log 0 := 0 convention; natural log.
inline double matrix_entropy(const Mat& d) {
  double h = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double v = d.data()[i];
    if (v < 0.0) throw std::invalid_argument("matrix_entropy: negative entry");
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// d(-H)/dD = log d + 1; callers fold the sign and weight themselves.
// Entries are clamped away from zero so the gradient stays finite.
inline Mat entropy_grad(const Mat& d) {
  Mat g(d.rows(), d.cols());
  constexpr double kFloor = 1e-300;
  for (std::size_t i = 0; i < d.size(); ++i)
    g.data()[i] = -(std::log(std::max(d.data()[i], kFloor)) + 1.0);
  return g;
}

}  // namespace atp
