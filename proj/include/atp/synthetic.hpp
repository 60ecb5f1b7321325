#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "atp/perm.hpp"
#include "atp/table.hpp"

namespace atp {

// Synthetic cell-lookup fixtures. Questions name a cell directly
// ("what is the value of r2c1"), so a victim trained on canonical layouts
// resolves them through serialized position and is order-sensitive by
// construction.
//
// Every table ships as a sibling pair that shares the same value multiset
// and the same question, but arranges the values differently and therefore
// has a different answer. A model cannot fit the corpus from any
// permutation-invariant statistic of the table; it has to read the queried
// slot. The eval flavor keeps its off-answer "trap" values away from the
// target's row and column, so single-factor permutations never reach them,
// most random permutations leave the read intact, and only a targeted
// row-and-column rearrangement pulls a trap into the queried slot.
struct LookupCorpusConfig {
  std::size_t data_rows = 4;
  std::size_t cols = 3;
  int eval_examples = 50;
  int distinct_examples = 12;
  int scatter_examples = 120;  // dominant-target tables with traps anywhere
  int traps_per_table = 2;     // alternates 1..traps_per_table across examples
  int value_pool = 12;
  std::uint64_t seed = 0;
};

struct LookupCorpus {
  std::vector<TqaExample> train;  // eval examples plus their siblings
  std::vector<TqaExample> eval;   // dominant-target flavor only
};

namespace detail {

inline std::string value_token(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "v%02d", v);
  return buf;
}

inline std::string cell_name(std::size_t i, std::size_t j) {
  return "r" + std::to_string(i) + "c" + std::to_string(j);
}

}  // namespace detail

inline LookupCorpus make_lookup_corpus(const LookupCorpusConfig& cfg) {
  const std::size_t n = cfg.data_rows, m = cfg.cols;
  if (n < 2 || m < 2) throw std::invalid_argument("make_lookup_corpus: need at least 2x2 data");
  if (cfg.value_pool < static_cast<int>(n * m))
    throw std::invalid_argument("make_lookup_corpus: value pool smaller than the grid");
  if (cfg.traps_per_table < 1 ||
      cfg.traps_per_table > static_cast<int>((n - 1) * (m - 1)) - 1)
    throw std::invalid_argument("make_lookup_corpus: bad trap count");

  Rng rng(cfg.seed);
  LookupCorpus corpus;

  auto base_table = [&](const std::string& id) {
    Table t;
    t.id = id;
    for (std::size_t j = 0; j < m; ++j) t.header.push_back("c" + std::to_string(j));
    t.rows.assign(n, std::vector<std::string>(m));
    return t;
  };
  auto make_question = [&](std::size_t i, std::size_t j) {
    return "what is the value of " + detail::cell_name(i, j);
  };
  auto pick = [&rng](std::size_t bound) {
    std::uniform_int_distribution<std::size_t> d(0, bound - 1);
    return d(rng);
  };

  char id[48];
  for (int k = 0; k < cfg.eval_examples; ++k) {
    const std::size_t ti = pick(n), tj = pick(m);
    const int dom = static_cast<int>(pick(static_cast<std::size_t>(cfg.value_pool)));
    const int trap_count = 1 + k % cfg.traps_per_table;
    std::vector<int> trap_vals;
    while (static_cast<int>(trap_vals.size()) < trap_count) {
      const int v = static_cast<int>(pick(static_cast<std::size_t>(cfg.value_pool)));
      if (v == dom) continue;
      bool dup = false;
      for (int w : trap_vals) dup |= (w == v);
      if (!dup) trap_vals.push_back(v);
    }

    // Dominant-target sibling: traps strictly off the target's row/column.
    std::snprintf(id, sizeof(id), "lookup-eval-%03d", k);
    {
      Table t = base_table(id);
      for (auto& row : t.rows)
        for (auto& cell : row) cell = detail::value_token(dom);
      std::vector<std::pair<std::size_t, std::size_t>> interior;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
          if (i != ti && j != tj) interior.emplace_back(i, j);
      const Perm order = random_perm(interior.size(), rng);
      for (int q = 0; q < trap_count; ++q) {
        const auto [i, j] = interior[order[static_cast<std::size_t>(q)]];
        t.rows[i][j] = detail::value_token(trap_vals[static_cast<std::size_t>(q)]);
      }
      TqaExample ex;
      ex.table = std::move(t);
      ex.question = make_question(ti, tj);
      ex.answer = detail::value_token(dom);
      corpus.eval.push_back(ex);
      corpus.train.push_back(std::move(ex));
    }

    // Trap-target sibling: identical value multiset and question, but the
    // first trap sits in the queried slot, so the answer differs.
    std::snprintf(id, sizeof(id), "lookup-trap-%03d", k);
    {
      Table t = base_table(id);
      for (auto& row : t.rows)
        for (auto& cell : row) cell = detail::value_token(dom);
      t.rows[ti][tj] = detail::value_token(trap_vals[0]);
      std::vector<std::pair<std::size_t, std::size_t>> rest;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
          if (!(i == ti && j == tj)) rest.emplace_back(i, j);
      const Perm order = random_perm(rest.size(), rng);
      for (int q = 1; q < trap_count; ++q) {
        const auto [i, j] = rest[order[static_cast<std::size_t>(q)]];
        t.rows[i][j] = detail::value_token(trap_vals[static_cast<std::size_t>(q)]);
      }
      TqaExample ex;
      ex.table = std::move(t);
      ex.question = make_question(ti, tj);
      ex.answer = detail::value_token(trap_vals[0]);
      corpus.train.push_back(std::move(ex));
    }
  }

  // Scatter flavor: dominant-target questions with traps allowed anywhere
  // except the queried slot. Permutations move traps to arbitrary places, so
  // training has to cover those layouts or the victim reacts erratically to
  // trap positions it never saw.
  for (int k = 0; k < cfg.scatter_examples; ++k) {
    const std::size_t ti = pick(n), tj = pick(m);
    const int dom = static_cast<int>(pick(static_cast<std::size_t>(cfg.value_pool)));
    const int trap_count = 1 + k % cfg.traps_per_table;
    std::snprintf(id, sizeof(id), "lookup-scatter-%03d", k);
    Table t = base_table(id);
    for (auto& row : t.rows)
      for (auto& cell : row) cell = detail::value_token(dom);
    std::vector<std::pair<std::size_t, std::size_t>> rest;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (!(i == ti && j == tj)) rest.emplace_back(i, j);
    const Perm order = random_perm(rest.size(), rng);
    for (int q = 0; q < trap_count; ++q) {
      const auto [i, j] = rest[order[static_cast<std::size_t>(q)]];
      int v = dom;
      while (v == dom) v = static_cast<int>(pick(static_cast<std::size_t>(cfg.value_pool)));
      t.rows[i][j] = detail::value_token(v);
    }
    TqaExample ex;
    ex.table = std::move(t);
    ex.question = make_question(ti, tj);
    ex.answer = detail::value_token(dom);
    corpus.train.push_back(std::move(ex));
  }

  // Distinct-value sibling pairs: same value set, two arrangements that
  // disagree on the queried slot.
  for (int k = 0; k < cfg.distinct_examples; ++k) {
    const std::size_t ti = pick(n), tj = pick(m);
    const Perm values = random_perm(static_cast<std::size_t>(cfg.value_pool), rng);
    std::snprintf(id, sizeof(id), "lookup-dist-%03d", k);
    Table t = base_table(id);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        t.rows[i][j] = detail::value_token(static_cast<int>(values[i * m + j]));
    TqaExample ex;
    ex.table = t;
    ex.question = make_question(ti, tj);
    ex.answer = t.rows[ti][tj];
    corpus.train.push_back(std::move(ex));

    std::size_t si = pick(n), sj = pick(m);
    while (si == ti && sj == tj) {
      si = pick(n);
      sj = pick(m);
    }
    std::snprintf(id, sizeof(id), "lookup-dist-%03d-alt", k);
    t.id = id;
    std::swap(t.rows[ti][tj], t.rows[si][sj]);
    TqaExample alt;
    alt.table = std::move(t);
    alt.question = make_question(ti, tj);
    alt.answer = alt.table.rows[ti][tj];
    corpus.train.push_back(std::move(alt));
  }
  return corpus;
}

}  // namespace atp
