#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "atp/matrix.hpp"
#include "atp/perm.hpp"

namespace atp {

namespace detail {

// Kuhn-Munkres with shortest augmenting paths, O(n^3), minimizing cost.
// Returns row -> column assignment.
inline std::vector<std::size_t> hungarian_min(const Mat& cost) {
  const std::size_t n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace detail

struct Assignment {
  Perm perm;     // perm.map[i] = column matched to row i
  double value;  // sum of weights along the matching
};

// Maximum-weight perfect matching on a square weight matrix.
inline Assignment max_assignment(const Mat& weight) {
  if (weight.rows() != weight.cols()) throw std::invalid_argument("max_assignment: square input required");
  const std::size_t n = weight.rows();
  if (n == 0) return {Perm{}, 0.0};
  Mat cost(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = -weight(i, j);
  Perm perm(detail::hungarian_min(cost));
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += weight(i, perm[i]);
  return {std::move(perm), value};
}

// Nearest permutation under the Frobenius inner product:
//   argmax_P <P, d>  =  a maximum-weight matching.
// Among optimal matchings the result is the lexicographically smallest
// mapping: row 0 takes the lowest column it can while staying optimal, then
// row 1, and so on.
inline Perm project_to_permutation(const Mat& d) {
  if (d.rows() != d.cols()) throw std::invalid_argument("project_to_permutation: square input required");
  const std::size_t n = d.rows();
  if (n == 0) return Perm{};
  if (n == 1) return identity_perm(1);

  const double best = max_assignment(d).value;
  const double tol = 1e-9 * std::max(1.0, std::abs(best));

  std::vector<std::size_t> chosen(n, 0);
  std::vector<char> col_used(n, 0);
  double fixed_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (std::size_t c = 0; c < n && !placed; ++c) {
      if (col_used[c]) continue;
      // Best completion over the remaining rows and columns.
      std::vector<std::size_t> free_cols;
      for (std::size_t j = 0; j < n; ++j) {
        if (!col_used[j] && j != c) free_cols.push_back(j);
      }
      const std::size_t rest = n - i - 1;
      double completion = 0.0;
      if (rest > 0) {
        Mat sub(rest, rest);
        for (std::size_t a = 0; a < rest; ++a)
          for (std::size_t b = 0; b < rest; ++b) sub(a, b) = d(i + 1 + a, free_cols[b]);
        completion = max_assignment(sub).value;
      }
      if (fixed_sum + d(i, c) + completion >= best - tol) {
        chosen[i] = c;
        col_used[c] = 1;
        fixed_sum += d(i, c);
        placed = true;
      }
    }
    if (!placed) throw std::logic_error("project_to_permutation: no feasible column");
  }
  return Perm(std::move(chosen));
}

}  // namespace atp
