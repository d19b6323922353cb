#include <gtest/gtest.h>

#include <cmath>

#include "equivar/expr.hpp"
#include "equivar/parse.hpp"
#include "equivar/tape.hpp"
#include "equivar/zero_test.hpp"
#include "support/random_expr.hpp"

namespace equivar {
namespace {

double central_difference(const Expr& e, Assignment at, const std::string& x, double h = 1e-6) {
  const double x0 = at[x];
  at[x] = x0 + h;
  double fp = evaluate(e, at);
  at[x] = x0 - h;
  double fm = evaluate(e, at);
  return (fp - fm) / (2 * h);
}

TEST(Parse, KineticEnergy) {
  Expr e = parse("0.5*(v1^2+v2^2)");
  EXPECT_EQ(e.op(), Op::Mul);
  EXPECT_DOUBLE_EQ(evaluate(e, {{"v1", 1.0}, {"v2", 0.0}}), 0.5);
}

TEST(Parse, FunctionCall) {
  EXPECT_DOUBLE_EQ(evaluate(parse("sin(q1)*v1"), {{"q1", 0.0}, {"v1", 3.0}}), 0.0);
}

TEST(Parse, DanglingCaretReportsOffset) {
  try {
    parse("q1^");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 3u);
  }
}

TEST(Parse, UnknownFunction) {
  try {
    parse("1 + tanh(q1)");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_NE(std::string(e.what()).find("tanh"), std::string::npos);
  }
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("(q1"), ParseError);
  EXPECT_THROW(parse("q1 q2"), ParseError);
  EXPECT_THROW(parse("*q1"), ParseError);
}

TEST(Parse, PrecedenceAndAssociativity) {
  Assignment a{{"x", 2.0}, {"y", 3.0}};
  EXPECT_DOUBLE_EQ(evaluate(parse("-x^2"), a), -4.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("2^3^2"), a), 512.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("x - y - 1"), a), -2.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("x / y * 3"), a), 2.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("x*-y"), a), -6.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("1.5e1 + .5"), a), 15.5);
}

TEST(Differentiate, PowerRule) {
  Expr d = differentiate(parse("0.5*v1^2"), "v1");
  EXPECT_EQ(d, var("v1"));
}

TEST(Differentiate, Constant) { EXPECT_TRUE(differentiate(Expr(7.0), "q1").is_constant(0.0)); }

TEST(Differentiate, AgreesWithFiniteDifference) {
  Expr e = parse("sin(q1)*v1");
  Expr d = differentiate(e, "q1");
  Assignment at{{"q1", 0.3}, {"v1", 2.0}};
  const double fd = central_difference(e, at, "q1");
  EXPECT_NEAR(evaluate(d, at), fd, 1e-8);
  EXPECT_NEAR(evaluate(d, at), 1.9106729, 1e-6);
}

TEST(Differentiate, OnlyVariablesOfTheOperand) {
  testing::RandomExpr gen({"x", "y", "z"}, 7);
  for (int k = 0; k < 100; ++k) {
    Expr e = gen(5);
    auto vars = variables(e);
    for (const auto& x : {"x", "y", "z"}) {
      for (const auto& v : variables(differentiate(e, x))) EXPECT_TRUE(vars.count(v)) << v;
    }
  }
}

TEST(Differentiate, RandomExpressionsMatchCentralDifferences) {
  testing::RandomExpr gen({"x", "y"}, 11);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    Expr e = gen(6);
    Assignment at = gen.point();
    for (const auto& x : {"x", "y"}) {
      double sym = evaluate(differentiate(e, x), at);
      double fd = central_difference(e, at, x);
      // FD noise grows with |f|/h; scale the tolerance accordingly.
      double scale = std::max({1.0, std::abs(sym), std::abs(evaluate(e, at))});
      EXPECT_NEAR(sym, fd, 1e-7 * scale) << to_string(e) << " d/d" << x;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 200);
}

TEST(Evaluate, Examples) {
  EXPECT_DOUBLE_EQ(evaluate(parse("0.5*v1^2"), {{"v1", 2.0}}), 2.0);
  EXPECT_THROW(evaluate(parse("q1/q2"), {{"q1", 1.0}, {"q2", 0.0}}), DomainError);
  EXPECT_NEAR(evaluate(parse("exp(q1)+log(q1)"), {{"q1", 1.0}}), 2.718281828, 1e-9);
}

TEST(Evaluate, DomainAndBinding) {
  EXPECT_THROW(evaluate(parse("log(q1)"), {{"q1", 0.0}}), DomainError);
  EXPECT_THROW(evaluate(parse("sqrt(q1)"), {{"q1", -1.0}}), DomainError);
  EXPECT_THROW(evaluate(parse("q1^0.5"), {{"q1", -1.0}}), DomainError);
  EXPECT_DOUBLE_EQ(evaluate(parse("q1^3"), {{"q1", -2.0}}), -8.0);
  EXPECT_THROW(evaluate(parse("q1 + q2"), {{"q1", 1.0}}), UnboundVariable);
}

TEST(Substitute, Rescaling) {
  Expr e = substitute(parse("0.5*v1^2"), {{"v1", parse("vhat1/w")}});
  EXPECT_EQ(variables(e), (std::set<std::string>{"vhat1", "w"}));
  EXPECT_DOUBLE_EQ(evaluate(e, {{"vhat1", 3.0}, {"w", 2.0}}), 0.5 * 1.5 * 1.5);
}

TEST(Substitute, IsSimultaneous) {
  Expr e = substitute(var("q1"), {{"q1", parse("q1+1")}});
  EXPECT_EQ(e, parse("q1+1"));
  Expr swapped = substitute(parse("q1 - 2*q2"), {{"q1", var("q2")}, {"q2", var("q1")}});
  EXPECT_DOUBLE_EQ(evaluate(swapped, {{"q1", 1.0}, {"q2", 5.0}}), 3.0);
}

TEST(Substitute, BindTime) {
  Expr e = substitute(parse("q1*v1"), {{"q1", var("t")}});
  EXPECT_EQ(e, parse("t*v1"));
}

TEST(Substitute, ThenEvaluateEqualsComposedAssignment) {
  testing::RandomExpr gen({"x", "y"}, 3);
  testing::RandomExpr inner({"u", "w"}, 4);
  for (int k = 0; k < 50; ++k) {
    Expr e = gen(4);
    Expr fx = inner(3), fy = inner(3);
    Assignment at = inner.point();
    Assignment composed{{"x", evaluate(fx, at)}, {"y", evaluate(fy, at)}};
    EXPECT_NEAR(evaluate(substitute(e, {{"x", fx}, {"y", fy}}), at), evaluate(e, composed), 1e-10);
  }
}

TEST(Simplify, ConservativeIdentities) {
  Expr x = var("x");
  EXPECT_EQ(x + Expr(0.0), x);
  EXPECT_EQ(Expr(1.0) * x, x);
  EXPECT_TRUE((Expr(0.0) * x).is_constant(0.0));
  EXPECT_EQ(neg(neg(x)), x);
  EXPECT_TRUE((Expr(2.0) * Expr(3.0)).is_constant(6.0));
  EXPECT_EQ(pow(x, Expr(1.0)), x);
  EXPECT_EQ((x + (x + Expr(1.0))).args().size(), 3u);  // flattened
  EXPECT_EQ(log(Expr(-1.0)).op(), Op::Log);            // not folded outside the domain
}

TEST(Simplify, PreservesValue) {
  testing::RandomExpr gen({"x", "y", "z"}, 5);
  for (int k = 0; k < 100; ++k) {
    Expr raw = gen.raw(6);
    Expr s = simplify(raw);
    Assignment at = gen.point();
    double a = evaluate(raw, at), b = evaluate(s, at);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(Print, RoundTripIsEvaluationEquivalent) {
  testing::RandomExpr gen({"q1", "v1", "t"}, 9);
  for (int k = 0; k < 200; ++k) {
    Expr e = gen(6);
    Expr back = parse(to_string(e));
    Assignment at = gen.point();
    double a = evaluate(e, at), b = evaluate(back, at);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a))) << to_string(e);
  }
}

TEST(Print, Readable) {
  EXPECT_EQ(to_string(parse("-q1 - a1")), "-q1 - a1");
  EXPECT_EQ(to_string(parse("x - (y + z)")), "x - (y + z)");
  EXPECT_EQ(to_string(parse("(-2)^x")), "(-2)^x");
  EXPECT_EQ(to_string(parse("x^(-2*y)")), "x^(-2*y)");
}

TEST(Tape, MatchesTreeEvaluation) {
  testing::RandomExpr gen({"x", "y"}, 21);
  for (int k = 0; k < 50; ++k) {
    Expr e = gen(6);
    Expr d = differentiate(differentiate(e, "x"), "y");
    Tape tape(std::vector<Expr>{e, d}, {"x", "y"});
    Assignment at = gen.point();
    auto out = tape(std::vector<double>{at["x"], at["y"]});
    EXPECT_DOUBLE_EQ(out[0], evaluate(e, at));
    EXPECT_NEAR(out[1], evaluate(d, at), 1e-12 * std::max(1.0, std::abs(out[1])));
  }
}

TEST(Tape, UnboundVariable) { EXPECT_THROW(Tape(parse("x + y"), {"x"}), UnboundVariable); }

TEST(ZeroTest, Pythagoras) { EXPECT_TRUE(is_zero(parse("sin(q1)^2+cos(q1)^2-1"), 100, 1, 1e-9)); }

TEST(ZeroTest, Difference) { EXPECT_FALSE(is_zero(parse("q1-q2"), 100, 1, 1e-9)); }

TEST(ZeroTest, WitnessAndDomainResampling) {
  auto r = zero_test(parse("log(q1)*0 + q1 - q1"));  // 0*log folds away
  EXPECT_TRUE(r.zero);
  auto s = zero_test(parse("sqrt(q1) - sqrt(q1)"));  // half the box is rejected
  EXPECT_TRUE(s.zero);
  EXPECT_GT(s.rejected, 0);
  auto f = zero_test(parse("q1"));
  EXPECT_FALSE(f.zero);
  EXPECT_NEAR(std::abs(f.witness.at("q1")), f.max_abs, 1e-15);
}

TEST(ZeroTest, RetryCapExhaustion) {
  ZeroTestOptions opt;
  opt.retry_cap = 50;
  auto r = zero_test(parse("log(-1 - q1^2)"), opt);
  EXPECT_FALSE(r.zero);
  EXPECT_TRUE(r.exhausted);
}

TEST(ZeroTest, RejectsNonPositiveTolerance) {
  EXPECT_THROW(is_zero(Expr(0.0), 10, 0, 0.0), PreconditionError);
}

}  // namespace
}  // namespace equivar
