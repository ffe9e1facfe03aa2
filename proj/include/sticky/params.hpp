#pragma once

#include <Eigen/Dense>

#include <utility>

namespace sticky {

// Market and preference data. Rates are per year; death intensity `delta`
// enters every discount rate, so simulations never draw a death time.
struct MarketParams {
  double r = 0.03;
  double delta = 0.05;
  double rho = 0.6;
  double gamma = 0.5;
  double k = 1.0;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  double mu_y = 0.0;
  Eigen::VectorXd sigma_y;
  Eigen::MatrixXd C1;
  Eigen::MatrixXd C2;

  int n() const { return static_cast<int>(mu.size()); }
  // Throws ConfigError / DomainError on malformed data. Does not check the
  // well-posedness assumptions (see check_assumptions in valuation.hpp).
  void validate() const;
  bool perfectly_correlated() const;
};

// Diagonal factors C1 = diag(rho_i), C2 = diag(sqrt(1 - rho_i^2)).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> diagonal_correlation(const Eigen::VectorXd& rho);

// C1^T C1 + C2^T C2 = I and C1 C1^T + C2 C2^T = I (the second makes
// C1 Z + C2 Z* a standard Brownian motion), both within `tol`.
void validate_correlation(const Eigen::MatrixXd& C1, const Eigen::MatrixXd& C2,
                          double tol = 1e-12);

// Convenience one-asset market with perfect income correlation.
MarketParams single_asset_market(double r, double delta, double rho, double gamma, double k,
                                 double mu, double sigma, double mu_y, double sigma_y);

}  // namespace sticky
