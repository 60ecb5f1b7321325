#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "atp/attack.hpp"
#include "atp/table.hpp"
#include "atp/victim.hpp"

namespace atp {

struct EvoConfig {
  int population_size = 5;
  int generations = 5;
  int elite_count = 2;
  double crossover_rate = 0.9;
  double mutation_rate = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 2) throw std::invalid_argument("EvoConfig: population_size must be >= 2");
    if (generations < 1) throw std::invalid_argument("EvoConfig: generations must be >= 1");
    if (elite_count < 1 || elite_count >= population_size)
      throw std::invalid_argument("EvoConfig: elite_count must be in [1, population_size)");
    if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1)
      throw std::invalid_argument("EvoConfig: rates must be in [0, 1]");
  }
};

struct Candidate {
  RowPerm row_perm;
  ColPerm col_perm;
  double fitness = -std::numeric_limits<double>::infinity();
  bool evaluated = false;
};

// Higher is a stronger attack (victim loss under the permuted layout).
using PermScorer = std::function<double(const RowPerm&, const ColPerm&)>;

inline PermScorer make_ce_scorer(const ToyVictim& victim, const EncodedExample& ex,
                                 PositionMode mode = PositionMode::kSerializedOrder) {
  return [&victim, &ex, mode](const RowPerm& rp, const ColPerm& cp) {
    return forward_loss(victim, hard_permuted_input(ex, rp, cp, mode)).loss;
  };
}

inline std::pair<RowPerm, ColPerm> random_attack(const Table& table, Rng& rng) {
  return random_legal_permutation(table.n_rows(), table.n_cols(), rng);
}

inline RowPerm row_reversal(const Table& table) { return reversal_perm(table.n_rows()); }
inline ColPerm col_reversal(const Table& table) { return reversal_perm(table.n_cols()); }

// OX1: child copies p1[lo..hi); the remaining slots, walked cyclically from
// hi, take p2's elements in p2's cyclic order starting at index hi, skipping
// values already present.
inline Perm order_crossover(const Perm& p1, const Perm& p2, std::size_t lo, std::size_t hi) {
  const std::size_t len = p1.size();
  if (p2.size() != len) throw std::invalid_argument("order_crossover: length mismatch");
  if (!(lo < hi && hi <= len)) throw std::invalid_argument("order_crossover: bad cut");
  std::vector<std::size_t> child(len, len);
  std::vector<bool> used(len, false);
  for (std::size_t i = lo; i < hi; ++i) {
    child[i] = p1.map[i];
    used[p1.map[i]] = true;
  }
  std::size_t slot = hi % len;
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t v = p2.map[(hi + k) % len];
    if (used[v]) continue;
    while (child[slot] != len) slot = (slot + 1) % len;
    child[slot] = v;
    used[v] = true;
  }
  return Perm(std::move(child));
}

// Swap two distinct uniformly chosen positions; identity for length < 2.
inline Perm swap_mutation(const Perm& p, Rng& rng) {
  Perm out = p;
  if (p.size() < 2) return out;
  std::uniform_int_distribution<std::size_t> di(0, p.size() - 1);
  std::uniform_int_distribution<std::size_t> dj(0, p.size() - 2);
  const std::size_t i = di(rng);
  std::size_t j = dj(rng);
  if (j >= i) ++j;
  std::swap(out.map[i], out.map[j]);
  return out;
}

namespace detail {

inline void fill_generations(const ToyVictim& victim, const EncodedExample& ex, AttackResult* r,
                             PositionMode mode, std::size_t max_tokens) {
  const PermutedInput clean = identity_input(ex);
  r->clean_loss = forward_loss(victim, clean).loss;
  r->clean_generation = generate(victim, clean, max_tokens);
  const PermutedInput attacked = hard_permuted_input(ex, r->row_perm, r->col_perm, mode);
  r->attacked_loss = forward_loss(victim, attacked).loss;
  r->attacked_generation = generate(victim, attacked, max_tokens);
}

inline std::string perm_pair_key(const RowPerm& rp, const ColPerm& cp) {
  std::string key;
  for (std::size_t v : rp.map) key += std::to_string(v) + ",";
  key += "|";
  for (std::size_t v : cp.map) key += std::to_string(v) + ",";
  return key;
}

}  // namespace detail

// Draw k random layouts, score each (with caching across repeats) and keep
// the one the scorer dislikes most. Failing candidates are skipped; if every
// candidate fails the attack is an error.
inline AttackResult best_of_k(const ToyVictim& victim, const EncodedExample& ex, int k,
                              const PermScorer& scorer, Rng& rng,
                              PositionMode mode = PositionMode::kSerializedOrder,
                              std::size_t max_tokens = 8) {
  if (k < 1) throw std::invalid_argument("best_of_k: k must be >= 1");
  AttackResult result;
  std::map<std::string, double> cache;
  bool found = false;
  int failures = 0;
  for (int i = 0; i < k; ++i) {
    auto [rp, cp] = random_legal_permutation(ex.grid.grid_rows - 1, ex.grid.grid_cols, rng);
    const std::string key = detail::perm_pair_key(rp, cp);
    double fitness;
    if (auto it = cache.find(key); it != cache.end()) {
      fitness = it->second;
    } else {
      try {
        fitness = scorer(rp, cp);
        ++result.scorer_calls;
      } catch (const std::exception&) {
        ++failures;
        continue;
      }
      cache.emplace(key, fitness);
    }
    if (!found || fitness > result.fitness) {
      found = true;
      result.fitness = fitness;
      result.row_perm = rp;
      result.col_perm = cp;
    }
  }
  if (!found)
    throw std::runtime_error("best_of_k: all " + std::to_string(failures) + " candidates failed");
  detail::fill_generations(victim, ex, &result, mode, max_tokens);
  return result;
}

// Elitist evolutionary search over (row, col) permutation pairs. Generation 0
// holds the identity pair plus random pairs; every generation re-scores the
// full population, so the query budget is population_size * (generations + 1).
inline AttackResult evolutionary_search(const ToyVictim& victim, const EncodedExample& ex,
                                        const EvoConfig& cfg, const PermScorer& scorer,
                                        PositionMode mode = PositionMode::kSerializedOrder,
                                        std::size_t max_tokens = 8) {
  cfg.validate();
  const std::size_t n = ex.grid.grid_rows - 1, m = ex.grid.grid_cols;
  Rng rng(cfg.seed);

  std::vector<Candidate> pop;
  pop.push_back({identity_perm(n), identity_perm(m)});
  for (int i = 1; i < cfg.population_size; ++i) {
    auto [rp, cp] = random_legal_permutation(n, m, rng);
    pop.push_back({std::move(rp), std::move(cp)});
  }

  AttackResult result;
  bool found = false;
  Candidate best;
  auto score_all = [&](std::vector<Candidate>& generation) {
    for (Candidate& c : generation) {
      ++result.scorer_calls;
      try {
        c.fitness = scorer(c.row_perm, c.col_perm);
        c.evaluated = true;
      } catch (const std::exception&) {
        c.fitness = -std::numeric_limits<double>::infinity();
        c.evaluated = false;
        continue;
      }
      if (!found || c.fitness > best.fitness) {
        found = true;
        best = c;
      }
    }
  };
  score_all(pop);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto tournament = [&](const std::vector<Candidate>& generation) -> const Candidate& {
    std::uniform_int_distribution<std::size_t> pick(0, generation.size() - 1);
    const Candidate& a = generation[pick(rng)];
    const Candidate& b = generation[pick(rng)];
    return a.fitness >= b.fitness ? a : b;
  };
  auto cross = [&](const Perm& a, const Perm& b) {
    if (a.size() < 2) return a;
    std::uniform_int_distribution<std::size_t> dlo(0, a.size() - 1);
    const std::size_t lo = dlo(rng);
    std::uniform_int_distribution<std::size_t> dhi(lo + 1, a.size());
    return order_crossover(a, b, lo, dhi(rng));
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Candidate> ranked = pop;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Candidate& a, const Candidate& b) { return a.fitness > b.fitness; });
    std::vector<Candidate> next(ranked.begin(), ranked.begin() + cfg.elite_count);
    while (static_cast<int>(next.size()) < cfg.population_size) {
      const Candidate& pa = tournament(pop);
      const Candidate& pb = tournament(pop);
      Candidate child;
      child.row_perm = coin(rng) < cfg.crossover_rate ? cross(pa.row_perm, pb.row_perm) : pa.row_perm;
      child.col_perm = coin(rng) < cfg.crossover_rate ? cross(pa.col_perm, pb.col_perm) : pa.col_perm;
      if (coin(rng) < cfg.mutation_rate) child.row_perm = swap_mutation(child.row_perm, rng);
      if (coin(rng) < cfg.mutation_rate) child.col_perm = swap_mutation(child.col_perm, rng);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    score_all(pop);
  }
  if (!found) throw std::runtime_error("evolutionary_search: every candidate failed");
  result.row_perm = best.row_perm;
  result.col_perm = best.col_perm;
  result.fitness = best.fitness;
  detail::fill_generations(victim, ex, &result, mode, max_tokens);
  return result;
}

}  // namespace atp
