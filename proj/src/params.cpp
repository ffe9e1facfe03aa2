#include "sticky/params.hpp"

#include "sticky/errors.hpp"

#include <cmath>
#include <sstream>

namespace sticky {

namespace {

bool lower_triangular(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

void validate_correlation(const Eigen::MatrixXd& C1, const Eigen::MatrixXd& C2, double tol) {
  const auto n = C1.rows();
  if (C1.cols() != n || C2.rows() != n || C2.cols() != n) {
    throw ConfigError("correlation factors C1, C2 must both be n x n");
  }
  if (!lower_triangular(C1) || !lower_triangular(C2)) {
    throw ConfigError("correlation factors C1, C2 must be lower triangular");
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  double e1 = (C1.transpose() * C1 + C2.transpose() * C2 - I).cwiseAbs().maxCoeff();
  double e2 = (C1 * C1.transpose() + C2 * C2.transpose() - I).cwiseAbs().maxCoeff();
  if (e1 > tol || e2 > tol) {
    std::ostringstream os;
    os << "correlation factor identity violated: |C1'C1 + C2'C2 - I| = " << e1
       << ", |C1C1' + C2C2' - I| = " << e2 << " (tolerance " << tol << ")";
    throw ConfigError(os.str());
  }
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> diagonal_correlation(const Eigen::VectorXd& rho) {
  if ((rho.array().abs() > 1.0).any()) throw ConfigError("correlations must lie in [-1, 1]");
  Eigen::VectorXd rest = (1.0 - rho.array().square()).sqrt();
  return {rho.asDiagonal(), rest.asDiagonal()};
}

void MarketParams::validate() const {
  const auto d = mu.size();
  if (d < 1) throw ConfigError("market needs at least one risky asset");
  if (sigma.rows() != d || sigma.cols() != d || sigma_y.size() != d) {
    throw ConfigError("dimension mismatch among mu, sigma, sigma_y");
  }
  if (!(r > 0.0) || !(delta > 0.0) || !(rho > 0.0) || !(k > 0.0) || !(gamma > 0.0)) {
    throw ConfigError("r, delta, rho, k, gamma must all be positive");
  }
  if (gamma == 1.0) throw ConfigError("gamma = 1 (log utility) is not supported");
  if (!mu.allFinite() || !sigma.allFinite() || !sigma_y.allFinite() || !std::isfinite(mu_y)) {
    throw ConfigError("non-finite market data");
  }
  validate_correlation(C1, C2);
}

bool MarketParams::perfectly_correlated() const {
  return C2.isZero(0.0) && C1.isIdentity(0.0);
}

MarketParams single_asset_market(double r, double delta, double rho, double gamma, double k,
                                 double mu, double sigma, double mu_y, double sigma_y) {
  MarketParams p;
  p.r = r;
  p.delta = delta;
  p.rho = rho;
  p.gamma = gamma;
  p.k = k;
  p.mu = Eigen::VectorXd::Constant(1, mu);
  p.sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
  p.mu_y = mu_y;
  p.sigma_y = Eigen::VectorXd::Constant(1, sigma_y);
  p.C1 = Eigen::MatrixXd::Identity(1, 1);
  p.C2 = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

}  // namespace sticky
