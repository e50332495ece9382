#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfbounds/error.hpp"
#include "mfbounds/lp_oracle.hpp"
#include "mfbounds/simplex.hpp"

using namespace mfb;

namespace {

DiscreteInstance two_by_two() {
  DiscreteInstance inst;
  inst.marginals = {{{8.0, 12.0}, {8.0, 12.0}}, {{0.5, 0.5}, {0.5, 0.5}}};
  return inst;
}

// Every coupling of two fair coins is [[a, 1/2 - a], [1/2 - a, a]] for a in [0, 1/2];
// the extremes are the vertices of the transport polytope.
double enumerate_2x2(const PayoffExpr& f, bool maximize) {
  const auto inst = two_by_two();
  double best = maximize ? -1e300 : 1e300;
  for (double a : {0.0, 0.5}) {
    const double mu[2][2] = {{a, 0.5 - a}, {0.5 - a, a}};
    double e = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) e += mu[i][j] * eval_payoff(f, std::vector<double>{inst.marginals.atoms[0][i], inst.marginals.atoms[1][j]});
    best = maximize ? std::max(best, e) : std::min(best, e);
  }
  return best;
}

}  // namespace

TEST(Simplex, SolvesSmallStandardForm) {
  // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4,  x1 + 3 x2 + s2 = 6
  lp::LinearProgram p({4.0, 6.0});
  p.add_column(-1, {0, 1}, {1, 1});
  p.add_column(-2, {0, 1}, {1, 3});
  p.add_column(0, {0}, {1});
  p.add_column(0, {1}, {1});
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, lp::Status::Optimal);
  EXPECT_NEAR(s.objective, -5.0, 1e-12);  // x = (3, 1)
  EXPECT_NEAR(s.x[0], 3.0, 1e-12);
  EXPECT_NEAR(s.x[1], 1.0, 1e-12);
  EXPECT_LT(s.max_residual, 1e-12);
  // complementary slackness: reduced costs c - A^T y are nonnegative
  EXPECT_GE(-1 - (s.duals[0] + s.duals[1]), -1e-12);
  EXPECT_GE(0 - s.duals[0], -1e-12);
}

TEST(Simplex, DetectsInfeasibilityWithFarkasVector) {
  // x1 + x2 = 1 and x1 + x2 = 2
  lp::LinearProgram p({1.0, 2.0});
  p.add_column(0, {0, 1}, {1, 1});
  p.add_column(0, {0, 1}, {1, 1});
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, lp::Status::Infeasible);
  ASSERT_EQ(s.duals.size(), 2u);
  const double yb = s.duals[0] * 1 + s.duals[1] * 2;
  EXPECT_GT(yb, 0);
  EXPECT_LE(s.duals[0] + s.duals[1], 1e-12);
}

TEST(Simplex, HandlesDegenerateAndRedundantRows) {
  // transportation problem with a redundant balance row
  lp::LinearProgram p({0.5, 0.5, 0.5, 0.5});
  const double cost[2][2] = {{1, 3}, {2, 1}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) p.add_column(cost[i][j], {i, 2 + j}, {1, 1});
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, lp::Status::Optimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
}

TEST(Simplex, RandomFeasibleProgramsMatchBruteForceBound) {
  // Feasible by construction: b = A x0 for x0 >= 0; objective value can never beat
  // the optimal vertex, which we check against x0 (upper bound) and duality.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 4, n = 10;
    std::vector<std::vector<double>> a(static_cast<std::size_t>(m), std::vector<double>(n));
    std::vector<double> x0(n), c(n), b(m, 0.0);
    for (int j = 0; j < n; ++j) {
      x0[static_cast<std::size_t>(j)] = u(rng);
      c[static_cast<std::size_t>(j)] = u(rng);
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = u(rng);
        b[static_cast<std::size_t>(i)] += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * x0[static_cast<std::size_t>(j)];
      }
    lp::LinearProgram p(b);
    for (int j = 0; j < n; ++j) {
      std::vector<int> rows;
      std::vector<double> vals;
      for (int i = 0; i < m; ++i) {
        rows.push_back(i);
        vals.push_back(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      }
      p.add_column(c[static_cast<std::size_t>(j)], rows, vals);
    }
    const auto s = lp::solve(p);
    ASSERT_EQ(s.status, lp::Status::Optimal) << trial;
    double cx0 = 0, by = 0;
    for (int j = 0; j < n; ++j) cx0 += c[static_cast<std::size_t>(j)] * x0[static_cast<std::size_t>(j)];
    for (int i = 0; i < m; ++i) by += b[static_cast<std::size_t>(i)] * s.duals[static_cast<std::size_t>(i)];
    EXPECT_LE(s.objective, cx0 + 1e-9);
    EXPECT_NEAR(s.objective, by, 1e-9);  // strong duality
    for (int j = 0; j < n; ++j) {
      double aty = 0;
      for (int i = 0; i < m; ++i) aty += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * s.duals[static_cast<std::size_t>(i)];
      EXPECT_GE(c[static_cast<std::size_t>(j)] - aty, -1e-9);  // dual feasibility
    }
  }
}

TEST(Discretize, QuantileAtoms) {
  auto flat = MarketSpec::uniform({0.0, 0.3}, 10.0, 0.0, 1.0);
  const auto inst = discretize(flat, {2, 200});
  EXPECT_EQ(inst.marginals.atoms[0], (std::vector<double>{10.0, 10.0}));
  EXPECT_EQ(inst.marginals.probs[0], (std::vector<double>{0.5, 0.5}));
  const auto& a = inst.marginals.atoms[1];
  for (std::size_t k = 1; k < a.size(); ++k) EXPECT_LT(a[k - 1], a[k]);
  EXPECT_NEAR(inst.marginals.mean(1) / 10.0 - 1.0, 0.0, 0.005);
  EXPECT_DOUBLE_EQ(a[0], marginal_quantile(flat, 1, 0.5 / 200));
}

TEST(Discretize, SizeCapRefusal) {
  const auto spec = MarketSpec::uniform({0.3, 0.3, 0.3, 0.3, 0.3, 0.3}, 10.0, 0.4, 1.5);
  try {
    discretize(spec, std::vector<int>(6, 50));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SizeCap);
  }
}

TEST(LpOracle, TwoByTwoBasketMatchesEnumeration) {
  const auto inst = two_by_two();
  const auto f = parse_payoff("(avg(x1, x2) - 9)^+", 2);
  const auto hi = solve_primal(inst, f, {}, Optimize::Max);
  const auto lo = solve_primal(inst, f, {}, Optimize::Min);
  EXPECT_NEAR(hi.optimum, enumerate_2x2(f, true), 1e-12);
  EXPECT_NEAR(lo.optimum, enumerate_2x2(f, false), 1e-12);
  EXPECT_NEAR(hi.optimum, 1.5, 1e-12);
  EXPECT_NEAR(lo.optimum, 1.0, 1e-12);  // antitone pairs both average 10
  ASSERT_EQ(hi.coupling.size(), 2u);
  for (const auto& c : hi.coupling) {
    EXPECT_EQ(c.atoms[0], c.atoms[1]);
    EXPECT_NEAR(c.mass, 0.5, 1e-12);
  }
  EXPECT_LT(hi.marginal_residual, 1e-12);
}

TEST(LpOracle, ConstantTargetIsItsValue) {
  const auto spec = MarketSpec::uniform({0.3, 0.4}, 10.0, 0.5, 1.5);
  const auto inst = discretize(spec, {10, 10});
  EXPECT_NEAR(solve_primal(inst, parse_payoff("7", 2), {}, Optimize::Max).optimum, 7.0, 1e-12);
  EXPECT_NEAR(solve_primal(inst, parse_payoff("7", 2), {}, Optimize::Min).optimum, 7.0, 1e-12);
}

TEST(LpOracle, SupermodularMaximumIsComonotone) {
  const auto spec = MarketSpec::uniform({0.3, 0.5}, 10.0, 0.0, 1.5);
  const auto inst = discretize(spec, {10, 10});
  const auto f = parse_payoff("x1 * x2", 2);
  const auto r = solve_primal(inst, f, {}, Optimize::Max);
  for (const auto& a : r.coupling)
    for (const auto& b : r.coupling) EXPECT_GE((a.atoms[0] - b.atoms[0]) * (a.atoms[1] - b.atoms[1]), 0);
  // independent oracle: comonotone pairing of equal quantile levels
  double expected = 0;
  for (int k = 0; k < 10; ++k) expected += 0.1 * inst.marginals.atoms[0][static_cast<std::size_t>(k)] * inst.marginals.atoms[1][static_cast<std::size_t>(k)];
  EXPECT_NEAR(r.optimum, expected, 1e-10);
}

TEST(LpOracle, ConstraintsTightenTheRange) {
  const auto spec = MarketSpec::uniform({0.3, 0.4}, 10.0, 0.5, 1.5);
  const auto inst = discretize(spec, {15, 15});
  const auto coupling = benchmark_grid_coupling(spec, inst.marginals, 200000, 3);
  const auto phi = parse_payoff("(avg(x1, x2) - 10)^+", 2);
  const auto f = parse_payoff("(max(x1, x2) - 6)^+", 2);
  const auto priced = price_on_grid(inst.marginals, coupling, phi);
  const auto bands = banded({priced});
  EXPECT_DOUBLE_EQ(bands[0].tolerance, 1e-9);
  const double free_hi = solve_primal(inst, f, {}, Optimize::Max).optimum;
  const double free_lo = solve_primal(inst, f, {}, Optimize::Min).optimum;
  const auto hi = solve_primal(inst, f, bands, Optimize::Max);
  const auto lo = solve_primal(inst, f, bands, Optimize::Min);
  const double benchmark = price_on_grid(inst.marginals, coupling, f).price;
  EXPECT_LE(hi.optimum, free_hi + 1e-9);
  EXPECT_GE(lo.optimum, free_lo - 1e-9);
  EXPECT_LE(lo.optimum, benchmark + 1e-9);
  EXPECT_GE(hi.optimum, benchmark - 1e-9);
  EXPECT_LT(hi.optimum - lo.optimum, free_hi - free_lo);
  ASSERT_EQ(hi.active.size(), 1u);
}

TEST(LpOracle, DefaultToleranceRule) {
  PricedInstrument mc{parse_payoff("x1", 1), 10.0, 0.01, 1000, 1, "copula"};
  EXPECT_DOUBLE_EQ(default_tolerance(mc), 0.03);
  mc.stderr_ = 1e-7;
  EXPECT_DOUBLE_EQ(default_tolerance(mc), 1e-4);
  mc.measure = "discrete";
  EXPECT_DOUBLE_EQ(default_tolerance(mc), 1e-9);
}

TEST(LpOracle, FeasibilityAcceptsConsistentAndCertifiesInflatedPrices) {
  const auto spec = MarketSpec::uniform({0.3, 0.4}, 10.0, 0.5, 1.5);
  const auto inst = discretize(spec, {12, 12});
  const auto coupling = benchmark_grid_coupling(spec, inst.marginals, 200000, 8);
  const auto phi = parse_payoff("(max(x1, x2) - 10)^+", 2);
  auto priced = price_on_grid(inst.marginals, coupling, phi);
  const auto ok = check_feasibility(inst, banded({priced}));
  EXPECT_TRUE(ok.feasible);
  EXPECT_FALSE(ok.coupling.empty());

  priced.price = solve_primal(inst, phi, {}, Optimize::Max).optimum + 0.05;
  const auto bands = banded({priced});
  const auto bad = check_feasibility(inst, bands);
  ASSERT_FALSE(bad.feasible);
  EXPECT_THROW(solve_primal(inst, parse_payoff("x1", 2), bands, Optimize::Max), Error);
  // Recheck the certificate independently: zero cost, strictly positive payoff everywhere.
  const auto& cert = bad.certificate;
  double cost = 0;
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 12; ++k) cost += cert.marginal_payoffs[static_cast<std::size_t>(j)][k] * inst.marginals.probs[static_cast<std::size_t>(j)][k];
  cost += cert.weights[0] * bands[0].price + std::abs(cert.weights[0]) * bands[0].tolerance;
  double floor = 1e300;
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = 0; b < 12; ++b) {
      const std::vector<double> x{inst.marginals.atoms[0][a], inst.marginals.atoms[1][b]};
      floor = std::min(floor, cert.marginal_payoffs[0][a] + cert.marginal_payoffs[1][b] + cert.weights[0] * eval_payoff(phi, x));
    }
  EXPECT_LE(cost, 1e-9);
  EXPECT_GT(floor, 1e-6);
  EXPECT_NEAR(floor, cert.floor, 1e-9);
  EXPECT_LT(cert.weights[0], 0.0);  // sells the overpriced option
}
