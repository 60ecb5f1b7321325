#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atp/perm.hpp"

namespace atp {

using BigInt = boost::multiprecision::cpp_int;

// A table is a header row plus an n x m grid of data cells. The header is
// stored apart from the data rows so no permutation can ever touch it.
struct Table {
  std::vector<std::string> header;               // m cells
  std::vector<std::vector<std::string>> rows;    // n rows of m cells
  std::string id;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return header.size(); }

  void validate() const {
    if (header.empty()) throw std::invalid_argument("table needs at least one column");
    for (const auto& row : rows) {
      if (row.size() != header.size())
        throw std::invalid_argument("ragged table: row width differs from header");
    }
  }

  bool operator==(const Table& other) const {
    return header == other.header && rows == other.rows;
  }
};

struct TqaExample {
  Table table;
  std::string question;
  std::string answer;
  bool order_sensitive = false;

  void validate() const {
    table.validate();
    if (question.empty()) throw std::invalid_argument("question must be nonempty");
    if (answer.empty()) throw std::invalid_argument("answer must be nonempty");
  }
};

// Row permutations act on data rows only; the header stays at index 0.
using RowPerm = Perm;
using ColPerm = Perm;

inline Table apply_permutation(const Table& table, const RowPerm& rp, const ColPerm& cp) {
  if (rp.size() != table.n_rows() || cp.size() != table.n_cols())
    throw std::invalid_argument("apply_permutation: permutation size does not match table");
  if (!is_permutation(rp) || !is_permutation(cp))
    throw std::invalid_argument("apply_permutation: mapping is not a bijection");
  Table out;
  out.id = table.id;
  out.header.resize(table.n_cols());
  for (std::size_t j = 0; j < table.n_cols(); ++j) out.header[j] = table.header[cp[j]];
  out.rows.resize(table.n_rows());
  for (std::size_t i = 0; i < table.n_rows(); ++i) {
    out.rows[i].resize(table.n_cols());
    for (std::size_t j = 0; j < table.n_cols(); ++j)
      out.rows[i][j] = table.rows[rp[i]][cp[j]];
  }
  return out;
}

inline std::string escape_cell(std::string_view cell) {
  std::string out;
  out.reserve(cell.size());
  for (char c : cell) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

// One line per row, header first, cells joined by "|" with a trailing "|".
// Cells containing "|" are escaped as "\|".
inline std::string linearize(const Table& table) {
  std::string out;
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (const auto& cell : row) {
      out += escape_cell(cell);
      out += '|';
    }
  };
  emit_row(table.header);
  for (const auto& row : table.rows) {
    out += '\n';
    emit_row(row);
  }
  return out;
}

// n! * m!: the header is pinned, so only data rows contribute on the row side.
inline BigInt attack_space_size(std::size_t n, std::size_t m) {
  if (m < 1) throw std::invalid_argument("attack_space_size: m must be >= 1");
  auto factorial = [](std::size_t k) {
    BigInt f = 1;
    for (std::size_t i = 2; i <= k; ++i) f *= i;
    return f;
  };
  return factorial(n) * factorial(m);
}

inline const std::vector<std::string>& default_order_keywords() {
  static const std::vector<std::string> kw = {
      "first", "last",  "top",   "bottom",    "initial",
      "final", "above", "below", "preceding", "following"};
  return kw;
}

// Whole-word match of any keyword in the lowercased question. This is a
// candidate filter; the benchmarks this mirrors also used human verification.
inline bool is_order_sensitive(std::string_view question,
                               const std::vector<std::string>& keywords = default_order_keywords()) {
  std::string word;
  auto check = [&keywords](const std::string& w) {
    for (const auto& k : keywords) {
      if (w == k) return true;
    }
    return false;
  };
  for (char ch : question) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      word += static_cast<char>(std::tolower(c));
    } else if (!word.empty()) {
      if (check(word)) return true;
      word.clear();
    }
  }
  return !word.empty() && check(word);
}

inline std::pair<RowPerm, ColPerm> random_legal_permutation(std::size_t n, std::size_t m, Rng& rng) {
  RowPerm rp = random_perm(n, rng);
  ColPerm cp = random_perm(m, rng);
  return {std::move(rp), std::move(cp)};
}

}  // namespace atp
