#include "generators.hpp"

#include "sticky/errors.hpp"
#include "sticky/labor_sdde.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace sticky;

namespace {

MarketParams quiet_market(double mu_y, double sigma_y, int n = 1) {
  auto p = single_asset_market(0.03, 0.05, 0.5, 0.5, 1.0, 0.07, 0.2, mu_y, sigma_y);
  if (n > 1) {
    p.mu = Eigen::VectorXd::Constant(n, 0.07);
    p.sigma = 0.2 * Eigen::MatrixXd::Identity(n, n);
    p.sigma_y = Eigen::VectorXd::Constant(n, sigma_y / std::sqrt(double(n)));
    p.C1 = Eigen::MatrixXd::Identity(n, n);
    p.C2 = Eigen::MatrixXd::Zero(n, n);
  }
  return p;
}

// Exact solution of y' = 0.1 y(t - 1) with y = 1 on [-1, 0], on [0, 2].
double steps_solution(double t) {
  if (t <= 1.0) return 1.0 + 0.1 * t;
  const double u = t - 1.0;
  return 1.1 + 0.1 * u + 0.005 * u * u;
}

}  // namespace

TEST_CASE("no delay, no noise: exponential growth") {
  auto p = quiet_market(0.02, 0.0);
  for (double h : {0.01, 0.001}) {
    auto x = HistorySegment::constant(1.0, h, 1.0);
    auto y = simulate_income(x, KernelProcess::constant(RadonMeasure(1.0)), p, 1.0, std::uint64_t{1});
    CHECK(std::abs(y.y(y.steps()) - 1.0202013400267558) < 0.02 * 0.02 * h + 1e-15);
  }
}

TEST_CASE("method of steps: y' = 0.1 y(t - 1)") {
  auto p = quiet_market(0.0, 0.0);
  auto k = KernelProcess::constant(RadonMeasure::dirac(1.0, -1.0, 0.1));
  std::vector<double> errs;
  for (double h : {0.01, 0.005, 0.0025}) {
    auto x = HistorySegment::constant(1.0, h, 1.0);
    auto y = simulate_income(x, k, p, 2.0, std::uint64_t{1}, Scheme::Euler);
    double err = 0.0;
    for (int i = 0; i <= y.steps(); ++i) err = std::max(err, std::abs(y.y(i) - steps_solution(i * h)));
    errs.push_back(err);
    CHECK(y.y(y.steps() / 2) == doctest::Approx(1.1).epsilon(1e-12));
  }
  // the first-segment solution is linear, so the error comes from [1, 2] and is O(h)
  CHECK(errs[0] < 0.01 * 0.02);
  CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("nonnegative kernel and positive history keep income positive") {
  gen::Gen g(31);
  for (int c = 0; c < 20; ++c) {
    CAPTURE(c);
    auto p = quiet_market(g.uniform(-0.05, 0.05), 0.4);
    auto phi = g.measure(0.5, 0.05, false, 0.5);
    auto x = g.history(0.5, 0.01);
    auto y = simulate_income(x, KernelProcess::constant(phi), p, 3.0, std::uint64_t(c));
    CHECK(y.path().minCoeff() > 0.0);
  }
}

TEST_CASE("feedback representation: zero kernel gives x0 times the stochastic exponential") {
  auto p = quiet_market(0.01, 0.2);
  auto x = HistorySegment::constant(1.0, 0.01, 1.5);
  auto k = KernelProcess::constant(RadonMeasure(1.0));
  auto y = simulate_income(x, k, p, 2.0, std::uint64_t{3});
  auto fb = feedback_representation(x, y, k, p);
  double z = 0.0;
  for (int i = 0; i <= fb.steps(); ++i) {
    double E = std::exp((0.01 - 0.02) * i * 0.01 + 0.2 * z);
    CHECK(fb.y(i) == doctest::Approx(1.5 * E).epsilon(1e-12));
    if (i < fb.steps()) z += y.dZ(0, i);
  }
}

TEST_CASE("feedback representation: no noise gives a deterministic exponential factor") {
  auto p = quiet_market(0.03, 0.0);
  auto x = HistorySegment::constant(1.0, 0.01, 1.0);
  auto k = KernelProcess::constant(RadonMeasure(1.0));
  auto fb = feedback_representation(x, simulate_income(x, k, p, 1.0, std::uint64_t{1}), k, p);
  CHECK(fb.y(100) == doctest::Approx(std::exp(0.03)).epsilon(1e-12));
}

TEST_CASE("feedback representation converges to the direct scheme at first order") {
  gen::Gen g(44);
  auto p = quiet_market(0.0, 0.15);
  auto phi = RadonMeasure::dirac(1.0, -0.5, 0.2) + RadonMeasure::flat(1.0, 0.1);
  auto k = KernelProcess::constant(phi);
  std::vector<double> gaps;
  for (double h : {0.02, 0.01, 0.005}) {
    double acc = 0.0;
    for (int path = 0; path < 100; ++path) {
      auto x = HistorySegment::constant(1.0, h, 1.0);
      auto plan = make_noise_plan(p, h, 5);
      auto y = simulate_income(x, k, p, 2.0, plan, path);
      auto fb = feedback_representation(x, y, k, p);
      acc += ((fb.path() - y.path()).array() / y.path().array()).abs().maxCoeff();
    }
    gaps.push_back(acc / 100);
  }
  CHECK(gaps[0] / gaps[1] == doctest::Approx(2.0).epsilon(0.25));
  CHECK(gaps[1] / gaps[2] == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("Picard: no delay, no noise") {
  auto p = quiet_market(0.05, 0.0);
  const double h = 0.01;
  auto x = HistorySegment::constant(1.0, h, 1.0);
  auto k = KernelProcess::constant(RadonMeasure(1.0));
  auto noise = generate_noise(make_noise_plan(p, h, 1), 0, 100);
  auto pr = picard_solve(x, k, p, 1.0, noise);
  // trapezoid fixed point: ((1 + 0.05 h / 2) / (1 - 0.05 h / 2))^N
  double trap = std::pow((1 + 0.025 * h) / (1 - 0.025 * h), 100);
  CHECK(pr.path.y(100) == doctest::Approx(trap).epsilon(1e-11));
  auto eu = simulate_income(x, k, p, 1.0, noise);
  CHECK(std::abs(pr.path.y(100) - eu.y(100)) < 5 * h * 1.0);
  CHECK(std::abs(pr.path.y(100) - std::exp(0.05)) < 1e-6);
}

TEST_CASE("Picard agrees with the stepping scheme within 5 h scale") {
  gen::Gen g(55);
  for (int c = 0; c < 20; ++c) {
    CAPTURE(c);
    auto p = g.market(g.integer(1, 3), g.coin());
    auto phi = g.measure(1.0, 0.1, true, 0.2);
    auto x = g.history(1.0, 0.01);
    auto k = KernelProcess::constant(phi);
    auto noise = generate_noise(make_noise_plan(p, 0.01, c), 0, 200);
    auto pr = picard_solve(x, k, p, 2.0, noise);
    auto y = simulate_income(x, k, p, 2.0, noise);
    double scale = std::max(1.0, y.path().cwiseAbs().maxCoeff());
    CHECK((pr.path.path() - y.path()).cwiseAbs().maxCoeff() <= 5 * 0.01 * scale);
  }
}

TEST_CASE("Picard contraction ratio decreases with the weighting rate") {
  auto p = quiet_market(0.0, 0.1);
  auto k = KernelProcess::constant(RadonMeasure::dirac(0.5, -0.5, 0.5) + RadonMeasure::flat(0.5, 0.5));
  auto x = HistorySegment::constant(0.5, 0.01, 1.0);
  auto noise = generate_noise(make_noise_plan(p, 0.01, 9), 0, 300);
  double prev = 2.0;
  for (double alpha : {0.0, 2.0, 8.0, 32.0}) {
    PicardOptions o;
    o.alpha = alpha;
    auto r = picard_solve(x, k, p, 3.0, noise, o);
    CAPTURE(alpha);
    CHECK(r.contraction_ratio < prev);
    prev = r.contraction_ratio;
  }
}

TEST_CASE("Picard reports non-convergence") {
  auto p = quiet_market(0.0, 0.1);
  auto k = KernelProcess::constant(RadonMeasure::flat(0.5, 5.0));
  auto x = HistorySegment::constant(0.5, 0.01, 1.0);
  auto noise = generate_noise(make_noise_plan(p, 0.01, 9), 0, 300);
  PicardOptions o;
  o.max_iterations = 3;
  CHECK_THROWS_AS(picard_solve(x, k, p, 3.0, noise, o), ConvergenceError);
}

TEST_CASE("positivity witness") {
  CHECK_FALSE(positivity_witness(RadonMeasure::flat(1.0, 0.2), 0.01).has_value());
  auto w = positivity_witness(-1.0 * RadonMeasure::dirac(1.0, -0.5), 0.01);
  REQUIRE(w.has_value());
  CHECK(w->mass_m == 1.0);
  CHECK(w->integral == doctest::Approx(-1.0));
  CHECK(w->integral < -w->mass_m / 2);
  CHECK(w->x0 == doctest::Approx(1.0 / 64.0 / 8.0));
  CHECK(w->history.x0() == w->x0);
  // tent peaking at -d/2
  CHECK(w->history.values[50] == 1.0);
  CHECK(w->history.values[10] == 0.0);
}

TEST_CASE("positivity witness for a narrow signed density") {
  RadonMeasure phi(1.0, {}, {{-1.0, 0.3}, {-0.6, -2.0}, {-0.55, 0.3}});
  auto w = positivity_witness(phi, 0.01);
  REQUIRE(w.has_value());
  CHECK(w->mass_m == doctest::Approx(0.1));
  CHECK(w->integral < -w->mass_m / 2);
}

TEST_CASE("witness history drives income below zero on some paths") {
  auto p = quiet_market(0.0, 0.1);
  auto phi = -1.0 * RadonMeasure::dirac(1.0, -0.5);
  auto w = positivity_witness(phi, 0.01);
  auto k = KernelProcess::constant(phi);
  auto e = crossing_fraction(w->history, k, p, 1.0, make_noise_plan(p, 0.01, 3), 500, 1);
  CHECK(e.fraction > 0.05);
}

TEST_CASE("income CSV has time, level and noise columns") {
  auto p = quiet_market(0.0, 0.1, 2);
  auto x = HistorySegment::constant(0.1, 0.05, 1.0);
  auto y = simulate_income(x, KernelProcess::constant(RadonMeasure(0.1)), p, 0.1, std::uint64_t{1});
  std::ostringstream os;
  write_income_csv(os, y);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,y,dZ_1,dZ_2,dZstar_1,dZstar_2");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("numerical blowup is reported with its step") {
  auto p = quiet_market(0.0, 0.0);
  auto k = KernelProcess::constant(RadonMeasure::dirac(0.01, -0.01, 1e300));
  auto x = HistorySegment::constant(0.01, 0.01, 1e10);
  CHECK_THROWS_AS(simulate_income(x, k, p, 1.0, std::uint64_t{1}), NumericalBlowup);
}
