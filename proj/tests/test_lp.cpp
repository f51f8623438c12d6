#include <gtest/gtest.h>

#include <random>

#include "gxstpir/lp.hpp"
#include "lp_oracle.hpp"

using namespace gxstpir;
using namespace gxstpir::lp;
using testsupport::RMatrix;

namespace {

Rational r(long p, long q = 1) { return Rational(p, q); }

void expect_feasible(const RMatrix& a, const std::vector<Rational>& b,
                     const std::vector<Rational>& x) {
  for (const auto& xi : x) EXPECT_GE(xi, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    Rational lhs = 0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += a[i][j] * x[j];
    EXPECT_LE(lhs, b[i]);
  }
}

}  // namespace

TEST(Simplex, TextbookMaximum) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
  RMatrix a{{r(1), r(0)}, {r(0), r(2)}, {r(3), r(2)}};
  auto res = maximize(a, {r(4), r(12), r(18)}, {r(3), r(5)});
  ASSERT_EQ(res.status, Status::Optimal);
  EXPECT_EQ(res.value, 36);
  EXPECT_EQ(res.x, (std::vector<Rational>{r(2), r(6)}));
}

TEST(Simplex, CoveringNeedsPhaseOne) {
  // min x + y s.t. x + y >= 1, x >= 1/3  ->  max -(x+y), value -1.
  RMatrix a{{r(-1), r(-1)}, {r(-1), r(0)}};
  auto res = maximize(a, {r(-1), r(-1, 3)}, {r(-1), r(-1)});
  ASSERT_EQ(res.status, Status::Optimal);
  EXPECT_EQ(res.value, -1);
  expect_feasible(a, {r(-1), r(-1, 3)}, res.x);
}

TEST(Simplex, InfeasibleAndUnbounded) {
  RMatrix a{{r(1)}, {r(-1)}};
  EXPECT_EQ(maximize(a, {r(1), r(-2)}, {r(1)}).status, Status::Infeasible);
  RMatrix b{{r(1), r(-1)}};
  EXPECT_EQ(maximize(b, {r(1)}, {r(0), r(1)}).status, Status::Unbounded);
}

TEST(Simplex, RedundantEqualityRows) {
  // x + y >= 1 listed twice and x + y <= 1: artificial left at zero level.
  RMatrix a{{r(-1), r(-1)}, {r(-1), r(-1)}, {r(1), r(1)}};
  std::vector<Rational> b{r(-1), r(-1), r(1)};
  auto res = maximize(a, b, {r(2), r(1)});
  ASSERT_EQ(res.status, Status::Optimal);
  EXPECT_EQ(res.value, 2);
  expect_feasible(a, b, res.x);
}

TEST(Simplex, DimensionErrors) {
  RMatrix a{{r(1), r(1)}};
  EXPECT_THROW(maximize(a, {r(1), r(2)}, {r(1), r(1)}), Error);
  EXPECT_THROW(maximize(a, {r(1)}, {r(1)}), Error);
}

TEST(Simplex, AgreesWithVertexEnumeration) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> coef(-4, 6), rhs(-3, 12);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const std::size_t n = 1 + rng() % 3, m = 1 + rng() % 4;
    RMatrix a;
    std::vector<Rational> b, c;
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<Rational> row;
      for (std::size_t j = 0; j < n; ++j) row.push_back(r(coef(rng)));
      a.push_back(row);
      b.push_back(r(rhs(rng), 1 + static_cast<long>(rng() % 3)));
    }
    // Box constraints keep the problem bounded.
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<Rational> row(n, r(0));
      row[j] = 1;
      a.push_back(row);
      b.push_back(r(10));
    }
    for (std::size_t j = 0; j < n; ++j) c.push_back(r(coef(rng)));
    auto res = maximize(a, b, c);
    auto oracle = testsupport::vertex_max(a, b, c);
    if (oracle) {
      ASSERT_EQ(res.status, Status::Optimal);
      EXPECT_EQ(res.value, *oracle);
      expect_feasible(a, b, res.x);
      Rational val = 0;
      for (std::size_t j = 0; j < n; ++j) val += c[j] * res.x[j];
      EXPECT_EQ(val, res.value);
      ++optimal;
    } else {
      EXPECT_EQ(res.status, Status::Infeasible);
      ++infeasible;
    }
  }
  EXPECT_GT(optimal, 50);
  EXPECT_GT(infeasible, 5);
}

TEST(Rational, Formatting) {
  EXPECT_EQ(to_string(r(2, 4)), "1/2");
  EXPECT_EQ(to_string(r(2)), "2/1");
  EXPECT_EQ(to_string(r(0)), "0/1");
  EXPECT_EQ(parse_rational("6/8"), r(3, 4));
  EXPECT_EQ(parse_rational("-3"), r(-3));
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
}
