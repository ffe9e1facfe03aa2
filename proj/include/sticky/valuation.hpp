#pragma once

#include "sticky/history.hpp"
#include "sticky/labor_sdde.hpp"
#include "sticky/mc.hpp"
#include "sticky/measure.hpp"
#include "sticky/params.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sticky {

// Names used in AssumptionViolation and in params-check output.
inline constexpr const char* kHumanCapitalCondition = "human-capital condition (beta > beta_inf)";
inline constexpr const char* kMertonCondition = "Merton well-posedness condition";
inline constexpr const char* kRobustCondition = "robust admissibility condition at the order minimum";

// kappa = sigma^{-1} (mu - r 1). Throws DomainError when sigma is singular or
// its condition number exceeds 1e12.
Eigen::VectorXd market_price_of_risk(const MarketParams& params);

// beta = r + delta - mu_y + sigma_y' C1 kappa. The C1 factor is the
// covariation of income with the pricing noise; it reduces to sigma_y' kappa
// under perfect correlation.
double beta(const MarketParams& params);

// Integral of e^{(r + delta) s} against phi, in closed form.
double beta_infinity(const RadonMeasure& phi, double r, double delta);

// beta - beta_inf; positive is the human-capital condition.
double human_capital_gap(const RadonMeasure& phi, const MarketParams& params);

// rho + delta - (1 - gamma)(r + delta + |kappa|^2 / (2 gamma)).
double merton_denominator(const MarketParams& params);

struct HumanCapital {
  double g = 0.0;
  GridFunction h;  // exact node values of h_inf on {-d, ..., 0}
};

// g_inf = 1 / (beta - beta_inf) and
// h_inf(s) = g_inf * integral over [-d, s] of e^{-(r+delta)(s - tau)} phi(dtau),
// atoms at s included. Throws AssumptionViolation when beta <= beta_inf.
HumanCapital human_capital_kernel(const RadonMeasure& phi, const MarketParams& params, double step);

struct PolicyConstants {
  Eigen::VectorXd kappa;
  double beta = 0.0;
  double beta_inf = 0.0;
  double g = 0.0;
  GridFunction h;
  double b = 0.0;
  double nu = 0.0;
  double f = 0.0;
  double gamma = 0.0;
  double bequest_factor = 0.0;  // k^{-b}
  Eigen::VectorXd merton;       // (sigma sigma')^{-1} (mu - r 1) / gamma
  Eigen::VectorXd hedge;        // (sigma')^{-1} C1' sigma_y
  Eigen::VectorXd loading;      // sigma' merton = kappa / gamma
  Eigen::VectorXd income_loading;  // C1' sigma_y

  double min_h() const { return h.values.minCoeff(); }
};

// All constants of the closed-form solution for kernel phi. Throws
// AssumptionViolation when either well-posedness condition fails.
PolicyConstants policy_constants(const RadonMeasure& phi, const MarketParams& params, double step);

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double statistic = 0.0;
  std::string details;
};

// Human-capital and Merton conditions for phi; with `robust` also the
// nonnegativity of h_inf on the grid.
std::vector<AssumptionCheck> check_assumptions(const RadonMeasure& phi, const MarketParams& params,
                                               double step, bool robust = false);

// G = w + g x0 + trapezoid <h_inf, x1>.
double total_wealth(double w, const HistorySegment& x, const PolicyConstants& pc);
// Same on raw window values (m + 1 nodes ending at x0).
double total_wealth(double w, const double* window, const PolicyConstants& pc);

enum class WealthRegion { Interior, Boundary, Exterior };
const char* to_string(WealthRegion r);

double boundary_band(double w, double x0);
WealthRegion classify_wealth(double G, double w, double x0);

struct MarkovOptions {
  double step = 1.0 / 250.0;
  double T_trunc = 0.0;  // 0 picks the smallest grid horizon with tail < tail_fraction * value
  double tail_fraction = 1e-3;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  Scheme scheme = Scheme::Milstein;
  double n_sigma = 3.0;
  double max_std_error = 0.0;  // > 0 flags runs with larger stderr as inconclusive
};

struct MarkovCheck {
  Estimate mc;
  double closed_form = 0.0;
  double T_trunc = 0.0;
  double statistic = 0.0;  // |mc - closed_form|
  double tolerance = 0.0;  // n_sigma stderr + tail bound
  bool pass = false;
  bool inconclusive = false;
};

// Bound on |E integral_T^inf xi y du| from the characteristic root lambda < 0 of
// lambda = -beta + integral of e^{(r + delta + lambda) s} |phi|(ds).
double markov_tail_bound(const HistorySegment& x, const RadonMeasure& phi,
                         const MarketParams& params, double T);

// Monte Carlo of E integral_0^T xi(u) y(u) du against g x0 + <h_inf, x1>.
MarkovCheck verify_markov_rep(const HistorySegment& x, const RadonMeasure& phi,
                              const MarketParams& params, const MarkovOptions& options);

}  // namespace sticky
