#include "atp/table.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "gtest/gtest.h"

namespace atp {
namespace {

Table small_table() {
  Table t;
  t.header = {"a", "b", "c"};
  t.rows = {{"1", "2", "3"}, {"4", "5", "6"}};
  return t;
}

TEST(ApplyPermutation, IdentityLeavesTableUnchanged) {
  const Table t = small_table();
  const Table out = apply_permutation(t, identity_perm(2), identity_perm(3));
  EXPECT_EQ(out, t);
}

TEST(ApplyPermutation, ReproducesKnownAdversarialSportsLayout) {
  const Table t = atp::testing::sports_table();
  const Table out = apply_permutation(t, atp::testing::sports_adversarial_row_perm(),
                                      atp::testing::sports_adversarial_col_perm());
  EXPECT_EQ(linearize(out), atp::testing::sports_table_adversarial_serialized());
  EXPECT_EQ(out.rows[0][0], "National Rugby League");
  EXPECT_EQ(out.header[2], "Year");
  EXPECT_EQ(out.header[3], "Average match attendance");
}

TEST(ApplyPermutation, InverseRoundTrips) {
  const Table t = atp::testing::sports_table();
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto [rp, cp] = random_legal_permutation(t.n_rows(), t.n_cols(), rng);
    const Table fwd = apply_permutation(t, rp, cp);
    const Table back = apply_permutation(fwd, inverse(rp), inverse(cp));
    EXPECT_EQ(back, t);
  }
}

TEST(ApplyPermutation, RejectsDimensionMismatch) {
  const Table t = small_table();
  EXPECT_THROW(apply_permutation(t, identity_perm(3), identity_perm(3)), std::invalid_argument);
  EXPECT_THROW(apply_permutation(t, identity_perm(2), identity_perm(2)), std::invalid_argument);
  EXPECT_THROW(apply_permutation(t, Perm({0, 0}), identity_perm(3)), std::invalid_argument);
}

TEST(ApplyPermutation, PreservesRowAndColumnMultisets) {
  const Table t = atp::testing::sports_table();
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto [rp, cp] = random_legal_permutation(t.n_rows(), t.n_cols(), rng);
    const Table out = apply_permutation(t, rp, cp);

    auto row_multiset = [](const Table& tab) {
      std::vector<std::vector<std::string>> rows;
      for (auto row : tab.rows) {
        std::sort(row.begin(), row.end());
        rows.push_back(std::move(row));
      }
      std::sort(rows.begin(), rows.end());
      return rows;
    };
    EXPECT_EQ(row_multiset(out), row_multiset(t));

    auto col_multiset = [](const Table& tab) {
      std::vector<std::vector<std::string>> cols;
      for (std::size_t j = 0; j < tab.n_cols(); ++j) {
        std::vector<std::string> col;
        for (std::size_t i = 0; i < tab.n_rows(); ++i) col.push_back(tab.rows[i][j]);
        std::sort(col.begin(), col.end());
        cols.push_back(std::move(col));
      }
      std::sort(cols.begin(), cols.end());
      return cols;
    };
    EXPECT_EQ(col_multiset(out), col_multiset(t));

    // Header cells never leave row 0.
    std::multiset<std::string> h0(t.header.begin(), t.header.end());
    std::multiset<std::string> h1(out.header.begin(), out.header.end());
    EXPECT_EQ(h0, h1);
  }
}

TEST(ApplyPermutation, ComposesConsistently) {
  const Table t = atp::testing::sports_table();
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto [rp1, cp1] = random_legal_permutation(t.n_rows(), t.n_cols(), rng);
    auto [rp2, cp2] = random_legal_permutation(t.n_rows(), t.n_cols(), rng);
    const Table twice = apply_permutation(apply_permutation(t, rp1, cp1), rp2, cp2);
    const Table once = apply_permutation(t, compose(rp1, rp2), compose(cp1, cp2));
    EXPECT_EQ(twice, once);
  }
}

TEST(Linearize, MatchesKnownSerialization) {
  EXPECT_EQ(linearize(atp::testing::sports_table()), atp::testing::sports_table_serialized());
}

TEST(Linearize, HeaderLine) {
  Table t;
  t.header = {"Competition", "Total spectatorship", "Average match attendance", "Year"};
  const std::string s = linearize(t);
  EXPECT_EQ(s, "Competition|Total spectatorship|Average match attendance|Year|");
}

TEST(Linearize, SingleCell) {
  Table t;
  t.header = {"x"};
  EXPECT_EQ(linearize(t), "x|");
}

TEST(Linearize, EmptyCellSerializesAsEmptyString) {
  Table t;
  t.header = {"a", "b", "c", "d"};
  t.rows = {{"Women's National Basketball League", "77,944", "", "2010/2011"}};
  const std::string s = linearize(t);
  EXPECT_NE(s.find("Women's National Basketball League|77,944||2010/2011|"), std::string::npos);
}

TEST(Linearize, EscapesPipeCells) {
  Table t;
  t.header = {"a|b"};
  EXPECT_EQ(linearize(t), "a\\|b|");
}

TEST(Linearize, InjectiveOnPipeFreeCells) {
  // Different tables over a pipe-free alphabet never collide.
  std::vector<Table> tables;
  const std::vector<std::string> cells = {"", "x", "y", "xy"};
  for (const auto& a : cells)
    for (const auto& b : cells)
      for (const auto& c : cells) {
        Table t;
        t.header = {a, b};
        t.rows = {{c, a}};
        tables.push_back(t);
        Table u;
        u.header = {a};
        u.rows = {{b}, {c}};
        tables.push_back(u);
      }
  std::map<std::string, Table> seen;
  for (const auto& t : tables) {
    const std::string s = linearize(t);
    auto it = seen.find(s);
    if (it != seen.end()) {
      EXPECT_EQ(it->second, t) << "collision on: " << s;
    } else {
      seen.emplace(s, t);
    }
  }
}

TEST(AttackSpaceSize, MatchesKnownCounts) {
  EXPECT_EQ(attack_space_size(8, 8), BigInt(1625702400));
  EXPECT_EQ(attack_space_size(9, 9), BigInt(131681894400LL));
  EXPECT_EQ(attack_space_size(0, 1), BigInt(1));
}

TEST(AttackSpaceSize, RejectsZeroColumns) {
  EXPECT_THROW(attack_space_size(3, 0), std::invalid_argument);
}

TEST(OrderSensitive, KeywordHits) {
  EXPECT_TRUE(is_order_sensitive("Which team is listed first?"));
  EXPECT_FALSE(is_order_sensitive("Which had the largest average match attendance?"));
  EXPECT_FALSE(is_order_sensitive(""));
}

TEST(OrderSensitive, WholeWordsOnly) {
  EXPECT_FALSE(is_order_sensitive("who won the firstly ever game"));
  EXPECT_TRUE(is_order_sensitive("value in the LAST row"));
  EXPECT_TRUE(is_order_sensitive("top scorer?", {"top"}));
  EXPECT_FALSE(is_order_sensitive("top scorer?", {"bottom"}));
}

TEST(RandomLegalPermutation, SingletonIsIdentity) {
  Rng rng(0);
  auto [rp, cp] = random_legal_permutation(1, 1, rng);
  EXPECT_TRUE(is_identity(rp));
  EXPECT_TRUE(is_identity(cp));
}

TEST(RandomLegalPermutation, DeterministicGivenSeed) {
  Rng a(42), b(42);
  auto [rp1, cp1] = random_legal_permutation(6, 5, a);
  auto [rp2, cp2] = random_legal_permutation(6, 5, b);
  EXPECT_EQ(rp1, rp2);
  EXPECT_EQ(cp1, cp2);
}

TEST(RandomLegalPermutation, UniformOverRowOrders) {
  // Each of the 24 orders of 4 rows should appear with frequency 1/24,
  // within a 3-sigma binomial bound.
  const int draws = 10000;
  Rng rng(123);
  std::map<std::vector<std::size_t>, int> counts;
  for (int i = 0; i < draws; ++i) {
    auto [rp, cp] = random_legal_permutation(4, 4, rng);
    counts[rp.map]++;
  }
  EXPECT_EQ(counts.size(), 24u);
  const double p = 1.0 / 24.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (const auto& [order, count] : counts) {
    EXPECT_NEAR(count, draws * p, 3.0 * sigma);
  }
}

}  // namespace
}  // namespace atp
