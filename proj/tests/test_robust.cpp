#include "sticky/errors.hpp"
#include "sticky/robust.hpp"

#include <doctest.h>

#include <cmath>

using namespace sticky;

namespace {

MarketParams market(double gamma) {
  return single_asset_market(0.03, 0.05, 0.6, gamma, 1.0, 0.07, 0.2, 0.0, 0.1);
}

UncertaintySet tube(double radius) {
  return UncertaintySet::tube(RadonMeasure::dirac(1.0, -1.0, 0.03) + RadonMeasure::flat(1.0, 0.03),
                              RadonMeasure::dirac(1.0, -1.0, radius) + RadonMeasure::flat(1.0, radius));
}

}  // namespace

TEST_CASE("order minimum of a tube") {
  auto K = UncertaintySet::tube(RadonMeasure::dirac(1.0, -1.0, 0.2), RadonMeasure::dirac(1.0, -1.0, 0.05));
  auto nu = order_minimum(K);
  REQUIRE(nu.atoms().size() == 1);
  CHECK(nu.atoms()[0].weight == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(K.contains(nu));
  CHECK(K.contains(K.maximum()));
  CHECK_FALSE(K.contains(RadonMeasure::dirac(1.0, -1.0, 0.3)));
  CHECK_THROWS_AS(UncertaintySet::tube(RadonMeasure(1.0), -1.0 * RadonMeasure::dirac(1.0, -1.0)), DomainError);
}

TEST_CASE("order minimum of families") {
  auto phi = RadonMeasure::flat(1.0, 0.1);
  CHECK(order_minimum(UncertaintySet::family({phi})) == phi);
  auto big = phi + RadonMeasure::dirac(1.0, -0.5, 0.1);
  CHECK(order_minimum(UncertaintySet::family({big, phi})) == phi);
  CHECK_THROWS_AS(order_minimum(UncertaintySet::family({RadonMeasure::dirac(1.0, -1.0), RadonMeasure::dirac(1.0, -0.5)})),
                  DomainError);
}

TEST_CASE("adversary sampler extremes") {
  auto K = tube(0.01);
  auto tm = default_adversary_templates(1.0);
  REQUIRE(tm.size() == 10);
  auto lo = adversary_sampler(K, tm[0], 1, 1.0), hi = adversary_sampler(K, tm[1], 1, 1.0);
  CHECK(compare(sample_kernel(lo, 0.5, {0.3}), K.minimum(), 1e-15) == OrderRelation::Equal);
  CHECK(compare(sample_kernel(hi, 0.5, {0.3}), K.maximum(), 1e-15) == OrderRelation::Equal);
  auto iq = adversary_sampler(K, tm[5], 1, 1.0);
  CHECK(iq.kind() == KernelProcess::Kind::StateModulated);
  CHECK(iq.tv_bound() == doctest::Approx(total_variation(K.maximum())));
  for (const auto& t : tm) CHECK_NOTHROW(adversary_sampler(K, t, 3, 1.0));
}

TEST_CASE("adversary sampler rejects templates leaving the set") {
  AdversaryTemplate bad{"overshoot", KernelProcess::Kind::StateModulated, [](double, double z) { return z; }};
  CHECK_THROWS_AS(adversary_sampler(tube(0.01), bad, 1, 1.0), DomainError);
}

TEST_CASE("singleton set reduces to the non-robust solution") {
  auto p = market(0.5);
  auto phi = RadonMeasure::flat(1.0, 0.05);
  auto x = HistorySegment::constant(1.0, 0.01, 1.0);
  auto rep = solve_robust(0.5, x, UncertaintySet::family({phi}), p);
  CHECK(rep.reduction_exact);
  CHECK(rep.robust_value == value_function(0.5, x, policy_constants(phi, p, 0.01)));
}

TEST_CASE("robust value: continuity and monotonicity in the tube radius") {
  auto p = market(0.5);
  auto x = HistorySegment::linear(1.0, 0.01, 0.8, 1.0);
  auto center = tube(0.0).center();
  double v0 = value_function(1.0, x, policy_constants(center, p, 0.01));
  double prev = v0;
  for (double r : {0.001, 0.005, 0.01, 0.02, 0.03}) {
    auto rep = solve_robust(1.0, x, tube(r), p);
    CHECK(rep.robust_value <= prev);
    CHECK(rep.reduction_exact);
    prev = rep.robust_value;
  }
  const double v_small = solve_robust(1.0, x, tube(1e-9), p).robust_value;
  CHECK(v_small <= v0);
  CHECK(v0 - v_small <= 1e-7 * v0);
}

TEST_CASE("robust errors") {
  auto p = market(0.5);
  auto x = HistorySegment::constant(1.0, 0.01, 1.0);
  CHECK_THROWS_AS(solve_robust(-1000.0, x, tube(0.01), p), AdmissibilityViolation);
  auto zero_patch = x;
  zero_patch.values[3] = 0.0;
  CHECK_THROWS_AS(solve_robust(1.0, zero_patch, tube(0.01), p), AssumptionViolation);
  auto signed_set = UncertaintySet::tube(RadonMeasure::dirac(1.0, -0.5, 0.01), RadonMeasure::dirac(1.0, -0.5, 0.5));
  try {
    solve_robust(1.0, x, signed_set, p);
    FAIL("expected a violation");
  } catch (const AssumptionViolation& e) {
    CHECK(e.assumption() == kRobustCondition);
  }
}

TEST_CASE("saddle stress on a tube") {
  for (double gamma : {0.5, 2.0}) {
    auto p = market(gamma);
    auto x = HistorySegment::linear(1.0, 0.02, 0.8, 1.0);
    StressOptions so;
    so.T = 1.0;
    so.n_paths = 30;
    auto rep = stress_saddle(1.0, x, tube(0.01), p, so);
    CHECK(rep.stress.size() == 10);
    CHECK(rep.stress_pass);
    for (const auto& s : rep.stress) {
      CAPTURE(s.adversary);
      CHECK(s.J_adversary == s.J_nu);
      CHECK(s.min_income_gap >= -1e-12);
      CHECK(s.max_shortfall <= rep.band);
    }
    // the lambda = 0 adversary is nu itself
    CHECK(rep.stress[0].max_shortfall == 0.0);
    CHECK(rep.stress[0].min_income_gap == 0.0);
  }
}
