#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "mfbounds/error.hpp"
#include "mfbounds/payoff.hpp"

using namespace mfb;

namespace {

struct Case {
  const char* text;
  std::function<double(const std::vector<double>&)> oracle;
};

double pos(double v) { return v > 0 ? v : 0; }

// Each expression with a hand-written evaluator over x = (x1, x2, x3).
const std::vector<Case>& corpus() {
  static const std::vector<Case> c = {
      {"5", [](auto&) { return 5.0; }},
      {"-3", [](auto&) { return -3.0; }},
      {"0", [](auto&) { return 0.0; }},
      {"x1", [](auto& x) { return x[0]; }},
      {"x1 + x2", [](auto& x) { return x[0] + x[1]; }},
      {"x1 - x2 - x3", [](auto& x) { return x[0] - x[1] - x[2]; }},
      {"x1 - (x2 - x3)", [](auto& x) { return x[0] - (x[1] - x[2]); }},
      {"x1 * x2 + x3", [](auto& x) { return x[0] * x[1] + x[2]; }},
      {"x1 * (x2 + x3)", [](auto& x) { return x[0] * (x[1] + x[2]); }},
      {"x1 / x2 / x3", [](auto& x) { return x[0] / x[1] / x[2]; }},
      {"x1 / (x2 / x3)", [](auto& x) { return x[0] / (x[1] / x[2]); }},
      {"(x1 - 6)^+", [](auto& x) { return pos(x[0] - 6); }},
      {"(6 - x1)^+", [](auto& x) { return pos(6 - x[0]); }},
      {"(max(x1, x2, x3) - 6)^+", [](auto& x) { return pos(std::max({x[0], x[1], x[2]}) - 6); }},
      {"(min(x1, x2, x3) - 6)^+", [](auto& x) { return pos(std::min({x[0], x[1], x[2]}) - 6); }},
      {"(7 - min(x1, x2))^+", [](auto& x) { return pos(7 - std::min(x[0], x[1])); }},
      {"(avg(x1, x2, x3) - 10)^+", [](auto& x) { return pos((x[0] + x[1] + x[2]) / 3 - 10); }},
      {"sum(x1, x2, x3)", [](auto& x) { return x[0] + x[1] + x[2]; }},
      {"pos(x2 - x1)", [](auto& x) { return pos(x[1] - x[0]); }},
      {"max(x1, 2 * x2) - min(x3, 4)", [](auto& x) { return std::max(x[0], 2 * x[1]) - std::min(x[2], 4.0); }},
      {"-x1", [](auto& x) { return -x[0]; }},
      {"-(x1 + x2)", [](auto& x) { return -(x[0] + x[1]); }},
      {"x1 * -2", [](auto& x) { return x[0] * -2; }},
      {"--x1", [](auto& x) { return x[0]; }},
      {"((x1))", [](auto& x) { return x[0]; }},
      {"0.5 * x1 + 0.25 * x2", [](auto& x) { return 0.5 * x[0] + 0.25 * x[1]; }},
      {"1e1 - x3", [](auto& x) { return 10 - x[2]; }},
      {"2.5e-1 * x3", [](auto& x) { return 0.25 * x[2]; }},
      {"(x1 - x2)^+ + (x2 - x1)^+", [](auto& x) { return std::abs(x[0] - x[1]); }},
      {"((x1 - 5)^+ - 1)^+", [](auto& x) { return pos(pos(x[0] - 5) - 1); }},
      {"max(min(x1, x2), min(x2, x3))", [](auto& x) { return std::max(std::min(x[0], x[1]), std::min(x[1], x[2])); }},
      {"avg(max(x1, x2), x3)", [](auto& x) { return (std::max(x[0], x[1]) + x[2]) / 2; }},
      {"  x1+x2*x3-1  ", [](auto& x) { return x[0] + x[1] * x[2] - 1; }},
      {"(x1 + x2) * (x2 - x3) / 4", [](auto& x) { return (x[0] + x[1]) * (x[1] - x[2]) / 4; }},
      {"max(x1, x2, x3, 0)", [](auto& x) { return std::max({x[0], x[1], x[2], 0.0}); }},
  };
  return c;
}

const std::vector<std::vector<double>> kPoints = {
    {10.0, 9.0, 11.0}, {3.5, 12.25, 7.0}, {6.0, 6.0, 6.0}, {0.5, 20.0, 1.5}, {14.0, 2.0, 9.75}};

}  // namespace

TEST(Payoff, CorpusHasThirtyPlusExpressions) { EXPECT_GE(corpus().size(), 30u); }

TEST(Payoff, CorpusEvaluatesLikeOracle) {
  for (const auto& c : corpus()) {
    const auto expr = parse_payoff(c.text, 3);
    for (const auto& x : kPoints) EXPECT_NEAR(eval_payoff(expr, x), c.oracle(x), 1e-12) << c.text;
  }
}

TEST(Payoff, CorpusRoundTripsThroughCanonicalText) {
  for (const auto& c : corpus()) {
    const auto expr = parse_payoff(c.text, 3);
    const std::string canonical = expr.to_string();
    const auto again = parse_payoff(canonical, 3);
    EXPECT_TRUE(again == expr) << c.text << " -> " << canonical;
    EXPECT_EQ(again.to_string(), canonical) << c.text;
    for (const auto& x : kPoints) EXPECT_EQ(eval_payoff(again, x), eval_payoff(expr, x)) << canonical;
  }
}

TEST(Payoff, CanonicalForms) {
  EXPECT_EQ(parse_payoff("( max( x1 ,x2,x3 )-6 )^+", 3).to_string(), "(max(x1, x2, x3) - 6)^+");
  EXPECT_EQ(parse_payoff("x1 - (x2 - x3)", 3).to_string(), "x1 - (x2 - x3)");
  EXPECT_EQ(parse_payoff("(x1 - x2) - x3", 3).to_string(), "x1 - x2 - x3");
  EXPECT_EQ(parse_payoff("(x1 * x2) + x3", 3).to_string(), "x1 * x2 + x3");
  EXPECT_EQ(parse_payoff("0.50", 1).to_string(), "0.5");
}

TEST(Payoff, ParseErrorsReportOffset) {
  struct Bad {
    const char* text;
    std::size_t offset;
  };
  for (const auto& b : {Bad{"x1 +", 4}, Bad{"max(x1 x2)", 7}, Bad{"(x1 - 6", 7}, Bad{"foo(x1)", 0}, Bad{"x1 ) ", 3}}) {
    try {
      parse_payoff(b.text, 3);
      FAIL() << "accepted " << b.text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse);
      EXPECT_EQ(e.offset(), b.offset) << b.text << ": " << e.what();
    }
  }
}

TEST(Payoff, UnboundVariableIsBindingError) {
  for (const char* text : {"x4", "x0", "max(x1, x7)"}) {
    try {
      parse_payoff(text, 3);
      FAIL() << "accepted " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Binding) << text;
    }
  }
}

TEST(Payoff, DivisionByZeroIsEvaluationError) {
  const auto expr = parse_payoff("x1 / (x2 - x3)", 3);
  Eigen::MatrixXd v(2, 3);
  v << 1, 2, 1, 1, 2, 2;
  try {
    eval_payoff(expr, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Evaluation);
  }
}

TEST(Payoff, BatchMatchesPointwise) {
  const auto expr = parse_payoff("(avg(x1, x2, x3) - 9)^+ - 0.5 * (8 - min(x1, x3))^+", 3);
  Eigen::MatrixXd v(static_cast<Eigen::Index>(kPoints.size()), 3);
  for (std::size_t r = 0; r < kPoints.size(); ++r)
    for (int j = 0; j < 3; ++j) v(static_cast<Eigen::Index>(r), j) = kPoints[r][static_cast<std::size_t>(j)];
  const auto out = eval_payoff(expr, v);
  for (std::size_t r = 0; r < kPoints.size(); ++r) EXPECT_DOUBLE_EQ(out(static_cast<Eigen::Index>(r)), eval_payoff(expr, kPoints[r]));
}

TEST(Payoff, BuiltinsMatchGrammar) {
  EXPECT_TRUE(builtin(PayoffKind::CallOnMax, {1, 2, 3}, 6, 3) == parse_payoff("(max(x1, x2, x3) - 6)^+", 3));
  EXPECT_TRUE(builtin(PayoffKind::CallOnMin, {1, 2}, 6.5, 3) == parse_payoff("(min(x1, x2) - 6.5)^+", 3));
  EXPECT_TRUE(builtin(PayoffKind::PutOnMin, {3, 4}, 7.75, 6) == parse_payoff("(7.75 - min(x3, x4))^+", 6));
  EXPECT_TRUE(builtin(PayoffKind::BasketCall, {1, 2}, 10, 2) == parse_payoff("(avg(x1, x2) - 10)^+", 2));
  EXPECT_TRUE(builtin(PayoffKind::VanillaCall, {2}, 9, 3) == parse_payoff("(x2 - 9)^+", 3));
  EXPECT_TRUE(builtin(PayoffKind::VanillaPut, {2}, 9, 3) == parse_payoff("(9 - x2)^+", 3));
  EXPECT_EQ(payoff_kind_from_string(to_string(PayoffKind::BasketCall)), PayoffKind::BasketCall);
}

TEST(Payoff, NegateAndStrikeTemplates) {
  const auto f = parse_payoff("(max(x1, x2) - 6)^+", 2);
  const auto g = negate(f);
  const std::vector<double> x{9.0, 4.0};
  EXPECT_DOUBLE_EQ(eval_payoff(g, x), -3.0);
  EXPECT_EQ(instantiate_strike("(x1 - {K})^+ + {K}", 6.5), "(x1 - 6.5)^+ + 6.5");
  EXPECT_EQ(format_number(13.0), "13");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(negate(parse_payoff("5", 1)).to_string(), "-5");
}
