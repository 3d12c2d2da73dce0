#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "meik/expr.hpp"
#include "support/testutil.hpp"

using meik::DomainError;
using meik::Dual2;
using meik::Expr;
using meik::ParseError;
using meik::UnknownFunction;
using meik::UnknownVariable;
using meik::test::Rng;

namespace {

double eval(const std::string& src, const std::vector<std::string>& vars,
            const std::vector<double>& point) {
  return Expr::parse(src, vars).eval_value(point);
}

}  // namespace

TEST_CASE("parse accepts the documented grammar") {
  Expr e = Expr::parse("tau1^2 + tau2^2", {"tau1", "tau2"});
  CHECK(e.serialize() == "tau1^2 + tau2^2");
  CHECK(eval("0.5*(tau1^2+tau2^2)", {"tau1", "tau2"}, {1.0, 1.0}) == doctest::Approx(1.0));
}

TEST_CASE("parse reports the byte offset of a malformed token") {
  try {
    Expr::parse("tau1 +* 2", {"tau1"});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 6);
    CHECK(!e.expected().empty());
  }
}

TEST_CASE("unknown identifiers are rejected with their offset") {
  CHECK_THROWS_AS(Expr::parse("tau1 + tau3", {"tau1", "tau2"}), UnknownVariable);
  CHECK_THROWS_AS(Expr::parse("foo(tau1)", {"tau1"}), UnknownFunction);
  try {
    Expr::parse("tau1 + tau3", {"tau1", "tau2"});
  } catch (const UnknownVariable& e) {
    CHECK(e.offset() == 7);
    CHECK(e.name() == "tau3");
  }
}

TEST_CASE("empty sources and duplicate variables are rejected") {
  CHECK_THROWS_AS(Expr::parse("", {"x"}), ParseError);
  CHECK_THROWS_AS(Expr::parse("   ", {"x"}), ParseError);
  CHECK_THROWS_AS(Expr::parse("x", {"x", "x"}), meik::Error);
}

TEST_CASE("operator precedence: ^ > unary - > * / > + -, ^ right-associative") {
  CHECK(eval("-2^2", {}, {}) == -4.0);
  CHECK(eval("2^3^2", {}, {}) == 512.0);
  CHECK(eval("2^-3", {}, {}) == 0.125);
  CHECK(eval("1 - 2 - 3", {}, {}) == -4.0);
  CHECK(eval("2*-3", {}, {}) == -6.0);
  CHECK(eval("-x^2", {"x"}, {3.0}) == -9.0);
  CHECK(eval("6/2/3", {}, {}) == 1.0);
}

TEST_CASE("eval_jet2: bilinear example") {
  Expr e = Expr::parse("tau1*tau2", {"tau1", "tau2"});
  const double p[2] = {3.0, 2.0};
  Dual2 d = e.eval_jet2(p);
  CHECK(d.value == 6.0);
  CHECK(d.grad(0) == 2.0);
  CHECK(d.grad(1) == 3.0);
  CHECK(d.hess(0, 0) == 0.0);
  CHECK(d.hess(0, 1) == 1.0);
  CHECK(d.hess(1, 0) == 1.0);
  CHECK(d.hess(1, 1) == 0.0);
}

TEST_CASE("eval_jet2: exp at 0") {
  Expr e = Expr::parse("exp(tau1)", {"tau1"});
  const double p[1] = {0.0};
  Dual2 d = e.eval_jet2(p);
  CHECK(d.value == 1.0);
  CHECK(d.grad(0) == 1.0);
  CHECK(d.hess(0, 0) == 1.0);
}

TEST_CASE("eval_jet2: ln(tau1^2+tau2^2) at (1,1) against finite differences") {
  Expr e = Expr::parse("ln(tau1^2+tau2^2)", {"tau1", "tau2"});
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  const double p[2] = {1.0, 1.0};
  Dual2 d = e.eval_jet2(p);
  CHECK(d.value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(d.grad(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.grad(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.hess(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d.hess(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));

  auto f = [&](const Eigen::VectorXd& q) {
    const double pt[2] = {q(0), q(1)};
    return e.eval_value(pt);
  };
  const Eigen::VectorXd g = meik::test::fd_gradient(f, x);
  const Eigen::MatrixXd h = meik::test::fd_hessian(f, x);
  CHECK((g - d.grad).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK((h - d.hess).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("domain errors name the offending sub-expression") {
  Expr e = Expr::parse("ln(x)", {"x"});
  const double p[1] = {-1.0};
  try {
    e.eval_jet2(p);
    FAIL("expected DomainError");
  } catch (const DomainError& err) {
    CHECK(std::string(err.what()).find("ln(x)") != std::string::npos);
  }

  Expr a = Expr::parse("abs(x)", {"x"});
  const double zero[1] = {0.0};
  CHECK_THROWS_AS(a.eval_jet2(zero), DomainError);
  CHECK_THROWS_AS(a.eval_jet1(zero), DomainError);

  Expr s = Expr::parse("sqrt(x)", {"x"});
  CHECK_THROWS_AS(s.eval_jet2(zero), DomainError);

  Expr q = Expr::parse("1/x", {"x"});
  CHECK_THROWS_AS(q.eval_value(zero), DomainError);
}

TEST_CASE("integer exponents work for any base, real exponents need positive base") {
  Expr cube = Expr::parse("x^3", {"x"});
  const double m2[1] = {-2.0};
  Dual2 d = cube.eval_jet2(m2);
  CHECK(d.value == -8.0);
  CHECK(d.grad(0) == 12.0);
  CHECK(d.hess(0, 0) == -12.0);

  Expr half = Expr::parse("x^2.5", {"x"});
  CHECK_THROWS_AS(half.eval_value(m2), DomainError);
  const double p4[1] = {4.0};
  CHECK(half.eval_value(p4) == doctest::Approx(32.0));

  Expr neg = Expr::parse("x^-2", {"x"});
  CHECK(neg.eval_value(m2) == 0.25);
  const double zero[1] = {0.0};
  CHECK_THROWS_AS(neg.eval_value(zero), DomainError);

  CHECK(eval("pow(x,2)", {"x"}, {-3.0}) == 9.0);

  Expr gen = Expr::parse("x^y", {"x", "y"});
  const double py[2] = {2.0, 3.5};
  CHECK(gen.eval_value(py) == doctest::Approx(std::pow(2.0, 3.5)));
  const double ny[2] = {-2.0, 3.5};
  CHECK_THROWS_AS(gen.eval_value(ny), DomainError);
}

TEST_CASE("the Hessian is bitwise symmetric") {
  Rng rng(7);
  const std::vector<std::string> vars = {"a", "b", "c"};
  for (int trial = 0; trial < 50; ++trial) {
    const std::string src = meik::test::random_polynomial(rng, vars, 4);
    Expr e = Expr::parse(src, vars);
    const double p[3] = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    Dual2 d = e.eval_jet2(p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(d.hess(i, j) == d.hess(j, i));
  }
}

TEST_CASE("1000 random polynomials match finite differences") {
  Rng rng(20240811);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nvars = 1 + rng.below(4);
    std::vector<std::string> vars;
    for (int i = 0; i < nvars; ++i) vars.push_back("v" + std::to_string(i + 1));
    const std::string src = meik::test::random_polynomial(rng, vars, 4);
    Expr e = Expr::parse(src, vars);

    Eigen::VectorXd x(nvars);
    for (int i = 0; i < nvars; ++i) x(i) = rng.uniform(-2.0, 2.0);
    auto f = [&](const Eigen::VectorXd& q) {
      return e.eval_value(std::span<const double>(q.data(), q.size()));
    };
    Dual2 d = e.eval_jet2(std::span<const double>(x.data(), x.size()));
    const Eigen::VectorXd g = meik::test::fd_gradient(f, x);
    const Eigen::MatrixXd h = meik::test::fd_hessian(f, x);
    REQUIRE((g - d.grad).lpNorm<Eigen::Infinity>() <= 1e-5);
    REQUIRE((h - d.hess).lpNorm<Eigen::Infinity>() <= 1e-3);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("serialize/parse round-trip is structurally exact and bit-stable") {
  Rng rng(99);
  std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"-(a+b)*c^2 - a/(b*c) + sin(a)*cos(b) - tanh(c)", {"a", "b", "c"}},
      {"exp(-a^2) + ln(1+a^2) + sqrt(4+a^2)", {"a"}},
      {"a^-2 + a^2.5 + a^b", {"a", "b"}},
      {"-a^2", {"a"}},
      {"(a^2)^3", {"a"}},
      {"a - (b - c)", {"a", "b", "c"}},
      {"a/(b/c)", {"a", "b", "c"}},
      {"abs(a)*sinh(b) + cosh(b)*tan(a/4)", {"a", "b"}},
      {"pow(a, 3) + pow(a, b)", {"a", "b"}},
      {"2^-3 + 1e-3 + 2.5e2", {}},
  };
  const std::vector<std::string> pvars = {"a", "b", "c"};
  for (int i = 0; i < 40; ++i) {
    cases.push_back({meik::test::random_polynomial(rng, pvars, 4), pvars});
  }

  for (const auto& [src, vars] : cases) {
    CAPTURE(src);
    Expr e1 = Expr::parse(src, vars);
    const std::string s1 = e1.serialize();
    Expr e2 = Expr::parse(s1, vars);
    REQUIRE(e1.structurally_equal(e2));
    REQUIRE(e2.serialize() == s1);

    Eigen::VectorXd x(vars.size());
    for (int i = 0; i < x.size(); ++i) x(i) = 0.25 + 0.5 * i;
    std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    bool threw1 = false, threw2 = false;
    Dual2 d1, d2;
    try {
      d1 = e1.eval_jet2(xs);
    } catch (const DomainError&) {
      threw1 = true;
    }
    try {
      d2 = e2.eval_jet2(xs);
    } catch (const DomainError&) {
      threw2 = true;
    }
    REQUIRE(threw1 == threw2);
    if (!threw1) {
      REQUIRE(d1.value == d2.value);
      REQUIRE((d1.grad.array() == d2.grad.array()).all());
      REQUIRE((d1.hess.array() == d2.hess.array()).all());
    }
  }
}
