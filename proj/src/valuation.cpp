#include "sticky/valuation.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sticky {

Eigen::VectorXd market_price_of_risk(const MarketParams& params) {
  const auto n = params.n();
  if (params.sigma.rows() != n || params.sigma.cols() != n) throw DomainError("sigma must be n x n");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(params.sigma);
  const auto& sv = svd.singularValues();
  if (sv[n - 1] == 0.0 || sv[0] / sv[n - 1] > 1e12) {
    std::ostringstream os;
    os << "volatility matrix sigma is singular or ill-conditioned (condition number "
       << (sv[n - 1] == 0.0 ? std::numeric_limits<double>::infinity() : sv[0] / sv[n - 1]) << ")";
    throw DomainError(os.str());
  }
  Eigen::VectorXd excess = params.mu.array() - params.r;
  return params.sigma.partialPivLu().solve(excess);
}

double beta(const MarketParams& params) {
  Eigen::VectorXd kappa = market_price_of_risk(params);
  return params.r + params.delta - params.mu_y + params.sigma_y.dot(params.C1 * kappa);
}

double beta_infinity(const RadonMeasure& phi, double r, double delta) {
  return exp_moment(phi, r + delta);
}

double human_capital_gap(const RadonMeasure& phi, const MarketParams& params) {
  return beta(params) - beta_infinity(phi, params.r, params.delta);
}

double merton_denominator(const MarketParams& params) {
  Eigen::VectorXd kappa = market_price_of_risk(params);
  const double g = params.gamma;
  return params.rho + params.delta -
         (1.0 - g) * (params.r + params.delta + kappa.squaredNorm() / (2.0 * g));
}

HumanCapital human_capital_kernel(const RadonMeasure& phi, const MarketParams& params, double step) {
  const double gap = human_capital_gap(phi, params);
  if (!(gap > 0.0)) {
    std::ostringstream os;
    os << "beta - beta_inf = " << gap << " <= 0; human capital is not finite";
    throw AssumptionViolation(kHumanCapitalCondition, os.str());
  }
  const double d = phi.horizon();
  const int m = window_cells(d, step);
  const double a = params.r + params.delta;
  HumanCapital hc;
  hc.g = 1.0 / gap;
  hc.h = {-d, step, Eigen::VectorXd(m + 1)};
  for (int i = 0; i <= m; ++i) {
    double s = i == m ? 0.0 : -d + i * step;
    hc.h.values[i] = hc.g * std::exp(-a * s) * exp_moment_upto(phi, a, s);
  }
  return hc;
}

PolicyConstants policy_constants(const RadonMeasure& phi, const MarketParams& params, double step) {
  params.validate();
  PolicyConstants pc;
  pc.kappa = market_price_of_risk(params);
  pc.beta = beta(params);
  pc.beta_inf = beta_infinity(phi, params.r, params.delta);
  auto hc = human_capital_kernel(phi, params, step);
  pc.g = hc.g;
  pc.h = std::move(hc.h);
  const double den = merton_denominator(params);
  if (!(den > 0.0)) {
    std::ostringstream os;
    os << "rho + delta - (1 - gamma)(r + delta + |kappa|^2 / (2 gamma)) = " << den << " <= 0";
    throw AssumptionViolation(kMertonCondition, os.str());
  }
  pc.gamma = params.gamma;
  pc.b = 1.0 - 1.0 / params.gamma;
  pc.nu = params.gamma / den;
  pc.bequest_factor = std::pow(params.k, -pc.b);
  pc.f = (1.0 + params.delta * pc.bequest_factor) * pc.nu;
  Eigen::VectorXd excess = params.mu.array() - params.r;
  Eigen::MatrixXd cov = params.sigma * params.sigma.transpose();
  pc.merton = cov.ldlt().solve(excess) / params.gamma;
  pc.income_loading = params.C1.transpose() * params.sigma_y;
  pc.hedge = params.sigma.transpose().partialPivLu().solve(pc.income_loading);
  pc.loading = pc.kappa / params.gamma;
  return pc;
}

std::vector<AssumptionCheck> check_assumptions(const RadonMeasure& phi, const MarketParams& params,
                                               double step, bool robust) {
  std::vector<AssumptionCheck> out;
  const double gap = human_capital_gap(phi, params);
  {
    std::ostringstream os;
    os << "beta = " << beta(params) << ", beta_inf = " << beta_infinity(phi, params.r, params.delta);
    out.push_back({kHumanCapitalCondition, gap > 0.0, gap, os.str()});
  }
  const double den = merton_denominator(params);
  out.push_back({kMertonCondition, den > 0.0, den, "rho + delta - (1 - gamma)(r + delta + |kappa|^2/(2 gamma))"});
  if (robust) {
    if (gap > 0.0) {
      auto hc = human_capital_kernel(phi, params, step);
      double mn = hc.h.values.minCoeff();
      std::ostringstream os;
      os << "min h_inf over the grid = " << mn;
      out.push_back({kRobustCondition, mn >= 0.0, mn, os.str()});
    } else {
      out.push_back({kRobustCondition, false, gap, "beta <= beta_inf at the order minimum"});
    }
  }
  return out;
}

double total_wealth(double w, const double* window, const PolicyConstants& pc) {
  const auto& hv = pc.h.values;
  const Eigen::Index m = hv.size() - 1;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) acc += hv[i] * window[i] + hv[i + 1] * window[i + 1];
  return w + pc.g * window[m] + pc.h.step * acc / 2.0;
}

double total_wealth(double w, const HistorySegment& x, const PolicyConstants& pc) {
  if (x.values.size() != pc.h.values.size()) throw DomainError("history and h_inf live on different grids");
  return total_wealth(w, x.values.data(), pc);
}

const char* to_string(WealthRegion r) {
  switch (r) {
    case WealthRegion::Interior: return "interior";
    case WealthRegion::Boundary: return "boundary";
    case WealthRegion::Exterior: return "exterior";
  }
  return "?";
}

double boundary_band(double w, double x0) { return 1e-9 * (1.0 + std::abs(w) + std::abs(x0)); }

WealthRegion classify_wealth(double G, double w, double x0) {
  double band = boundary_band(w, x0);
  if (std::abs(G) <= band) return WealthRegion::Boundary;
  return G > 0.0 ? WealthRegion::Interior : WealthRegion::Exterior;
}

double markov_tail_bound(const HistorySegment& x, const RadonMeasure& phi,
                         const MarketParams& params, double T) {
  const double a = params.r + params.delta;
  const double b = beta(params);
  const auto hj = hahn_jordan(phi);
  const RadonMeasure abs_phi = hj.positive + hj.negative;
  auto f = [&](double lam) { return lam + b - exp_moment(abs_phi, a + lam); };
  if (!(f(0.0) > 0.0)) return std::numeric_limits<double>::infinity();
  double lo = -std::max(b, 1e-12), hi = 0.0;
  while (f(lo) > 0.0) lo *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  // The comparison argument needs lambda at or above the root.
  const double lam = hi;
  const double d = phi.horizon();
  const int m = x.cells();
  double M = 0.0;
  for (int i = 0; i < m; ++i) {
    double u0 = -d + i * x.step, u1 = i + 1 == m ? 0.0 : -d + (i + 1) * x.step;
    double xm = std::max(std::abs(x.values[i]), std::abs(x.values[i + 1]));
    double em = std::max(std::exp(-(a + lam) * u0), std::exp(-(a + lam) * u1));
    M = std::max(M, xm * em);
  }
  return M * std::exp(lam * T) / (-lam);
}

MarkovCheck verify_markov_rep(const HistorySegment& x, const RadonMeasure& phi,
                              const MarketParams& params, const MarkovOptions& opt) {
  params.validate();
  x.validate(phi.horizon());
  const double h = opt.step;
  if (std::abs(x.step - h) > 1e-15 * h) throw DomainError("history grid differs from the simulation step");
  auto hc = human_capital_kernel(phi, params, h);
  PolicyConstants pc;
  pc.g = hc.g;
  pc.h = hc.h;

  MarkovCheck out;
  out.closed_form = total_wealth(0.0, x, pc);
  double T = opt.T_trunc;
  if (T <= 0.0) {
    const double target = opt.tail_fraction * std::abs(out.closed_form);
    int N = 1;
    while (markov_tail_bound(x, phi, params, N * h) > target) {
      N *= 2;
      if (N > (1 << 24)) throw DomainError("tail bound does not decay; cannot pick a truncation horizon");
    }
    int lo = N / 2, hi = N;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      (markov_tail_bound(x, phi, params, mid * h) > target ? lo : hi) = mid;
    }
    T = hi * h;
  }
  const int N = static_cast<int>(std::llround(T / h));
  out.T_trunc = N * h;
  const double tail = markov_tail_bound(x, phi, params, out.T_trunc);

  const Eigen::VectorXd kappa = market_price_of_risk(params);
  const double xi_drift = -(params.r + params.delta + 0.5 * kappa.squaredNorm()) * h;
  const NoisePlan plan = make_noise_plan(params, h, opt.seed);
  plan.validate();
  const CompiledKernel ck(KernelProcess::constant(phi), h);

  std::vector<double> samples(opt.n_paths);
  parallel_for(opt.n_paths, opt.threads, [&](std::size_t p) {
    IncomeStepper st(x, ck, params, N, opt.scheme);
    NoiseStream ns(plan, p);
    Eigen::VectorXd dZ(params.n()), dZs(params.n());
    double xi = 1.0;
    double prev = st.y();
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
      ns.next(dZ, dZs);
      double y = st.advance(st.delay_term(0.0), st.income_shock(dZ, dZs));
      double xi_next = xi * std::exp(xi_drift - kappa.dot(dZ));
      acc += 0.5 * h * (xi * prev + xi_next * y);
      xi = xi_next;
      prev = y;
    }
    samples[p] = acc;
  });
  out.mc = estimate(samples, tail);
  out.statistic = std::abs(out.mc.mean - out.closed_form);
  out.tolerance = opt.n_sigma * out.mc.std_error + tail;
  out.pass = out.statistic <= out.tolerance;
  out.inconclusive = opt.max_std_error > 0.0 && out.mc.std_error > opt.max_std_error;
  return out;
}

}  // namespace sticky
