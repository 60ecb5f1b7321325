#pragma once

#include <cstddef>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "atp/matrix.hpp"

namespace atp {

using Rng = std::mt19937_64;

// A permutation in gather form: map[i] is the source index placed at slot i.
// Applying p to a sequence x yields y with y[i] = x[p.map[i]].
struct Perm {
  std::vector<std::size_t> map;

  Perm() = default;
  explicit Perm(std::vector<std::size_t> m) : map(std::move(m)) {}

  std::size_t size() const { return map.size(); }
  std::size_t operator[](std::size_t i) const { return map[i]; }
  bool operator==(const Perm& other) const { return map == other.map; }
};

inline bool is_permutation(const Perm& p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p.map) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

inline Perm identity_perm(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  return Perm(std::move(m));
}

inline bool is_identity(const Perm& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.map[i] != i) return false;
  }
  return true;
}

inline Perm reversal_perm(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = n - 1 - i;
  return Perm(std::move(m));
}

inline Perm inverse(const Perm& p) {
  std::vector<std::size_t> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[p.map[i]] = i;
  return Perm(std::move(m));
}

// Applying `b` after `a`: apply(apply(x, a), b) == apply(x, compose(a, b)).
inline Perm compose(const Perm& a, const Perm& b) {
  if (a.size() != b.size()) throw std::invalid_argument("compose: length mismatch");
  std::vector<std::size_t> m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = a.map[b.map[i]];
  return Perm(std::move(m));
}

// 0/1 matrix P with P(i, map[i]) = 1, so (P X)(i, :) = X(map[i], :).
inline Mat perm_matrix(const Perm& p) {
  Mat m(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(i, p.map[i]) = 1.0;
  return m;
}

inline bool is_permutation_matrix(const Mat& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (std::abs(v - 1.0) <= tol) {
        ++ones;
      } else if (std::abs(v) > tol) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  for (std::size_t j = 0; j < m.cols(); ++j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j) - 1.0) <= tol) ++ones;
    }
    if (ones != 1) return false;
  }
  return true;
}

// Fisher-Yates shuffle of the identity; uniform over all n! permutations.
inline Perm random_perm(std::size_t n, Rng& rng) {
  Perm p = identity_perm(n);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> dist(0, i - 1);
    std::swap(p.map[i - 1], p.map[dist(rng)]);
  }
  return p;
}

}  // namespace atp
