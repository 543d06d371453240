#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "xtc/error.hpp"
#include "xtc/hungarian.hpp"

using namespace xtc;

namespace {

// min over injective maps of the smaller side into the larger one
double brute_force(const CostMatrix& m) {
  const bool wide = m.rows() <= m.cols();
  const std::size_t small = wide ? m.rows() : m.cols();
  const std::size_t large = wide ? m.cols() : m.rows();
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (std::size_t i = 0; i < small; ++i) s += wide ? m(i, perm[i]) : m(perm[i], i);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return small == 0 ? 0.0 : best;
}

CostMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CostMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST(Hungarian, KnownSquare) {
  const CostMatrix m{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  const auto a = solve_assignment(m);
  EXPECT_DOUBLE_EQ(a.total_cost, 5.0);
  EXPECT_EQ(a.row_to_col[0], 1u);
  EXPECT_EQ(a.row_to_col[1], 0u);
  EXPECT_EQ(a.row_to_col[2], 2u);
}

TEST(Hungarian, MatchesBruteForceOnRectangles) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 300; ++t) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    const CostMatrix m = random_matrix(rng, r, c);
    const auto a = solve_assignment(m);
    ASSERT_NEAR(a.total_cost, brute_force(m), 1e-9) << r << "x" << c;
    // the reported total is the sum of the reported pairs, columns distinct
    double s = 0;
    std::vector<bool> used(c, false);
    std::size_t assigned = 0;
    for (const auto& [i, j] : a.pairs()) {
      s += m(i, j);
      ASSERT_FALSE(used[j]);
      used[j] = true;
      ++assigned;
    }
    EXPECT_EQ(assigned, std::min(r, c));
    EXPECT_NEAR(s, a.total_cost, 1e-12);
  }
}

TEST(Hungarian, TallMatrixLeavesRowsUnassigned) {
  const CostMatrix m{{0.9}, {0.1}, {0.5}};
  const auto a = solve_assignment(m);
  EXPECT_FALSE(a.row_to_col[0].has_value());
  EXPECT_EQ(a.row_to_col[1], 0u);
  EXPECT_FALSE(a.row_to_col[2].has_value());
  EXPECT_DOUBLE_EQ(a.total_cost, 0.1);
}

TEST(Hungarian, TiesAreDeterministic) {
  const CostMatrix m(3, 3, 1.0);
  const auto a = solve_assignment(m);
  const auto b = solve_assignment(m);
  EXPECT_EQ(a.row_to_col, b.row_to_col);
  EXPECT_DOUBLE_EQ(a.total_cost, 3.0);
}

TEST(Hungarian, EmptyAndInvalid) {
  EXPECT_DOUBLE_EQ(solve_assignment(CostMatrix(0, 4)).total_cost, 0.0);
  EXPECT_TRUE(solve_assignment(CostMatrix(3, 0)).pairs().empty());
  CostMatrix bad(2, 2, 0.0);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(solve_assignment(bad), InputError);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_assignment(bad), InputError);
  EXPECT_THROW((CostMatrix{{1, 2}, {3}}), InputError);
}

TEST(Hungarian, NegativeAndLargeEntries) {
  const CostMatrix m{{-5, 2}, {3, -1e6}};
  EXPECT_DOUBLE_EQ(solve_assignment(m).total_cost, -5 - 1e6);
}
