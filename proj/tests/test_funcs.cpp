#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "meik/funcs.hpp"
#include "support/testutil.hpp"

using namespace meik;
using meik::test::Rng;

namespace {

// Draws sigma samples inside a branch domain, padding away from infinite ends.
double sample_sigma(Rng& rng, const Interval& dom) {
  double lo = std::isfinite(dom.lo) ? dom.lo : -20.0;
  double hi = std::isfinite(dom.hi) ? dom.hi : 20.0;
  if (std::isfinite(dom.lo) && dom.lo_open) lo += 1e-3;
  if (std::isfinite(dom.hi) && dom.hi_open) hi -= 1e-3;
  return rng.uniform(lo, hi);
}

void check_roundtrip(const FFamily& F, BranchSelector sel, int samples = 1000) {
  const InverseBranch br = F.branch(sel);
  Rng rng(1234);
  for (int i = 0; i < samples; ++i) {
    const double sigma = sample_sigma(rng, br.domain);
    const auto [phi, dphi] = F.phi_eval(br, sigma);
    const auto [f, df] = F.f_eval(phi);
    REQUIRE(std::abs(f - sigma) <= 1e-10);
    if (std::abs(df) > 1e-6) {
      REQUIRE(std::abs(dphi * df - 1.0) <= 1e-8);
    }
  }
}

}  // namespace

TEST_CASE("f_eval: documented values") {
  const auto [e0, de0] = FFamily::exponential().f_eval(0.0);
  CHECK(e0 == 1.0);
  CHECK(de0 == 1.0);

  const auto [q, dq] = FFamily::quadratic(1, 1).f_eval(2.0);
  CHECK(q == 5.0);
  CHECK(dq == 4.0);

  const auto [p, dp] = FFamily::power(3.0).f_eval(-2.0);
  CHECK(p == 8.0);
  CHECK(dp == -12.0);
}

TEST_CASE("power family derivative against finite differences of |s|^3") {
  const FFamily F = FFamily::power(3.0);
  for (double s : {-2.0, -0.7, 0.4, 1.9}) {
    const double h = 1e-6 * std::max(1.0, std::abs(s));
    const double fd = (F.f_eval(s + h).first - F.f_eval(s - h).first) / (2.0 * h);
    CHECK(F.f_eval(s).second == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("phi_eval: exponential inverse") {
  const FFamily F = FFamily::exponential();
  const InverseBranch br = F.branch(BranchSelector::principal());
  const auto [v, d] = F.phi_eval(br, 2.0);
  CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(d == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(br.domain.contains(1e-12));
  CHECK(!br.domain.contains(0.0));
  CHECK_THROWS_AS(F.phi_eval(br, -1.0), DomainError);
  CHECK_THROWS_AS(F.branch(BranchSelector::negative()), DomainError);
}

TEST_CASE("phi_eval: quadratic branches") {
  const FFamily F = FFamily::quadratic(1, 1);
  const InverseBranch prin = F.branch(BranchSelector::principal());
  const InverseBranch neg = F.branch(BranchSelector::negative());

  const auto [vp, dp] = F.phi_eval(prin, 5.0);
  CHECK(vp == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(dp == doctest::Approx(0.25).epsilon(1e-15));

  const auto [vn, dn] = F.phi_eval(neg, 5.0);
  CHECK(vn == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(dn == doctest::Approx(-0.25).epsilon(1e-15));

  CHECK(prin.domain.contains(1.0));
  CHECK(!prin.domain.contains(0.999));
  CHECK_THROWS_AS(F.phi_eval(prin, 0.5), DomainError);

  // Indexed selectors canonicalize onto the two branches.
  CHECK(F.phi_eval(F.branch(BranchSelector::indexed(1)), 5.0).first ==
        doctest::Approx(-2.0));
  CHECK_THROWS_AS(F.branch(BranchSelector::indexed(2)), DomainError);
}

TEST_CASE("quadratic family with eps2 = -1 inverts on the left half-line") {
  const FFamily F = FFamily::quadratic(1, -1);  // F(s) = 1 - s^2
  const InverseBranch br = F.branch(BranchSelector::principal());
  CHECK(br.domain.contains(-3.0));
  CHECK(br.domain.contains(1.0));
  CHECK(!br.domain.contains(1.5));
  const auto [v, d] = F.phi_eval(br, 0.0);
  CHECK(v == doctest::Approx(1.0));
  CHECK(d == doctest::Approx(-0.5));
}

TEST_CASE("family constraints are enforced") {
  CHECK_THROWS_AS(FFamily::quadratic(-1, -1), Error);
  CHECK_THROWS_AS(FFamily::quadratic(2, 1), Error);
  CHECK_THROWS_AS(FFamily::power(0.0), Error);
}

TEST_CASE("round-trip F(Phi(sigma)) = sigma across families and branches") {
  check_roundtrip(FFamily::exponential(), BranchSelector::principal());
  check_roundtrip(FFamily::power(3.0), BranchSelector::principal());
  check_roundtrip(FFamily::power(3.0), BranchSelector::negative());
  check_roundtrip(FFamily::power(0.5), BranchSelector::principal());
  check_roundtrip(FFamily::power(0.5), BranchSelector::negative());
  check_roundtrip(FFamily::power(-1.5), BranchSelector::principal());
  check_roundtrip(FFamily::quadratic(1, 1), BranchSelector::principal());
  check_roundtrip(FFamily::quadratic(1, 1), BranchSelector::negative());
  check_roundtrip(FFamily::quadratic(-1, 1), BranchSelector::principal());
  check_roundtrip(FFamily::quadratic(1, -1), BranchSelector::principal());
  check_roundtrip(FFamily::quadratic(1, -1), BranchSelector::negative());
  check_roundtrip(FFamily::custom_ut("u_t", std::string("sigma")),
                  BranchSelector::principal());
  check_roundtrip(FFamily::custom_ut("u_t^3+u_t", std::string("sigma/(1+sigma^2)")),
                  BranchSelector::principal(), 0);  // placeholder, no true inverse
}

TEST_CASE("power branch domains follow the exponent") {
  CHECK(FFamily::power(0.5).branch(BranchSelector::principal()).domain.contains(0.0));
  CHECK(!FFamily::power(3.0).branch(BranchSelector::principal()).domain.contains(0.0));
  CHECK(!FFamily::power(-1.5).branch(BranchSelector::principal()).domain.contains(0.0));
}

TEST_CASE("custom family without inverse raises NoInverse") {
  const FFamily F = FFamily::custom_ut("exp(u_t)+u_t^2+3", std::nullopt);
  CHECK_THROWS_AS(F.branch(BranchSelector::principal()), NoInverse);
  const auto [v, d] = F.f_eval(0.0);
  CHECK(v == doctest::Approx(4.0));
  CHECK(d == doctest::Approx(1.0));
}

TEST_CASE("general families evaluate full jets and refuse f_eval") {
  const FFamily F = FFamily::general("exp(u_t)+t^2+u^2+1");
  const GeneralJet g = F.general_eval(2.0, 3.0, 0.0);
  CHECK(g.f == doctest::Approx(15.0));
  CHECK(g.ft == doctest::Approx(4.0));
  CHECK(g.fu == doctest::Approx(6.0));
  CHECK(g.fut == doctest::Approx(1.0));
  CHECK_THROWS_AS(F.f_eval(0.0), DomainError);
  CHECK_THROWS_AS(F.branch(BranchSelector::principal()), DomainError);
}

TEST_CASE("non-general families report zero t,u partials") {
  const GeneralJet g = FFamily::exponential().general_eval(0.7, -0.3, 1.1);
  CHECK(g.ft == 0.0);
  CHECK(g.fu == 0.0);
  CHECK(g.f == doctest::Approx(std::exp(1.1)));
  CHECK(g.fut == doctest::Approx(std::exp(1.1)));
}

TEST_CASE("JSON encoding round-trips every family") {
  const std::vector<FFamily> families = {
      FFamily::exponential(),
      FFamily::power(3.0),
      FFamily::quadratic(1, -1),
      FFamily::custom_ut("u_t", std::string("sigma")),
      FFamily::custom_ut("exp(u_t)", std::nullopt),
      FFamily::general("exp(u_t)+t^2+u^2+1"),
  };
  for (const auto& f : families) {
    const FFamily g = FFamily::from_json(f.to_json());
    CHECK(g.kind() == f.kind());
    CHECK(g.to_json() == f.to_json());
  }
  CHECK_THROWS_AS(FFamily::from_json(nlohmann::json{{"family", "nope"}}), ScenarioError);
  CHECK_THROWS_AS(FFamily::from_json(nlohmann::json{{"family", "power"}}), ScenarioError);
}
