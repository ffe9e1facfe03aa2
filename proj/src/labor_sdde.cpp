#include "sticky/labor_sdde.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace sticky {

const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "milstein"; }

namespace {

int horizon_steps(double T, double h) {
  double ratio = T / h;
  double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-8 * std::max(1.0, ratio)) {
    throw DomainError("grid step h does not divide the horizon T");
  }
  return static_cast<int>(n);
}

void check_noise(const Increments& noise, const MarketParams& params, int N) {
  if (noise.dZ.rows() != params.n() || noise.dZ.cols() < N) {
    throw DomainError("driving increments do not cover the simulation horizon");
  }
}

}  // namespace

IncomeStepper::IncomeStepper(const HistorySegment& x, const CompiledKernel& kernel,
                             const MarketParams& params, int steps, Scheme scheme)
    : kernel_(&kernel),
      h_(x.step),
      mu_y_(params.mu_y),
      sy2_(params.sigma_y.squaredNorm()),
      sigma_c1_(params.C1.transpose() * params.sigma_y),
      sigma_c2_(params.C2.transpose() * params.sigma_y),
      milstein_(scheme == Scheme::Milstein),
      window_(x.cells()) {
  if (kernel.window() != window_) throw DomainError("kernel compiled on a different grid");
  full_.resize(window_ + steps + 1);
  prefix_.resize(window_ + steps + 1);
  full_.head(window_ + 1) = x.values;
  prefix_[0] = 0.0;
  for (int i = 1; i <= window_; ++i) prefix_[i] = prefix_[i - 1] + h_ * (full_[i - 1] + full_[i]) / 2.0;
}

double IncomeStepper::delay_term(double z) const {
  return kernel_->apply(k_ * h_, z, window_values(), window_prefix());
}

double IncomeStepper::income_shock(const Eigen::VectorXd& dZ, const Eigen::VectorXd& dZstar) const {
  return sigma_c1_.dot(dZ) + sigma_c2_.dot(dZstar);
}

double IncomeStepper::advance(double delay, double shock) {
  const int i = window_ + k_;
  const double y = full_[i];
  double next = y + (mu_y_ * y + delay) * h_ + y * shock;
  if (milstein_) next += 0.5 * y * (shock * shock - sy2_ * h_);
  if (!std::isfinite(next)) throw NumericalBlowup("income became non-finite", static_cast<std::size_t>(k_));
  full_[i + 1] = next;
  prefix_[i + 1] = prefix_[i] + h_ * (y + next) / 2.0;
  ++k_;
  return next;
}

IncomePath simulate_income(const HistorySegment& x, const KernelProcess& kernel,
                           const MarketParams& params, double T, const Increments& noise,
                           Scheme scheme) {
  x.validate(kernel.horizon());
  const int N = horizon_steps(T, x.step);
  check_noise(noise, params, N);
  CompiledKernel ck(kernel, x.step);
  IncomeStepper st(x, ck, params, N, scheme);
  double z = 0.0;
  Eigen::VectorXd dZ(params.n()), dZs(params.n());
  for (int k = 0; k < N; ++k) {
    dZ = noise.dZ.col(k);
    dZs = noise.dZstar.col(k);
    st.advance(st.delay_term(z), st.income_shock(dZ, dZs));
    z += dZ[0];
  }
  IncomePath out;
  out.step = x.step;
  out.window = x.cells();
  out.full = st.full();
  out.dZ = noise.dZ.leftCols(N);
  out.dZstar = noise.dZstar.leftCols(N);
  return out;
}

IncomePath simulate_income(const HistorySegment& x, const KernelProcess& kernel,
                           const MarketParams& params, double T, const NoisePlan& plan,
                           std::uint64_t path, Scheme scheme) {
  if (std::abs(plan.step - x.step) > 1e-15 * x.step) throw DomainError("noise plan step differs from the history grid");
  const int N = horizon_steps(T, x.step);
  return simulate_income(x, kernel, params, T, generate_noise(plan, path, N), scheme);
}

IncomePath simulate_income(const HistorySegment& x, const KernelProcess& kernel,
                           const MarketParams& params, double T, std::uint64_t seed,
                           Scheme scheme) {
  return simulate_income(x, kernel, params, T, make_noise_plan(params, x.step, seed), 0, scheme);
}

IncomePath feedback_representation(const HistorySegment& x, const IncomePath& income,
                                   const KernelProcess& kernel, const MarketParams& params) {
  const int N = income.steps();
  const int m = income.window;
  const double h = income.step;
  CompiledKernel ck(kernel, h);
  if (ck.window() != m) throw DomainError("kernel compiled on a different grid");
  const Eigen::MatrixXd zy = income.dZ.transpose() * (params.C1.transpose() * params.sigma_y) +
                             income.dZstar.transpose() * (params.C2.transpose() * params.sigma_y);
  const double drift = params.mu_y - 0.5 * params.sigma_y.squaredNorm();

  IncomePath out = income;
  Eigen::VectorXd& y = out.full;
  y.head(m + 1) = x.values;
  Eigen::VectorXd prefix(y.size());
  prefix[0] = 0.0;
  for (int i = 1; i <= m; ++i) prefix[i] = prefix[i - 1] + h * (y[i - 1] + y[i]) / 2.0;

  const double x0 = x.x0();
  double logE = 0.0;
  double I = 0.0;
  double z = 0.0;
  for (int k = 0; k < N; ++k) {
    double L = ck.apply(k * h, z, y.data() + k, prefix.data() + k);
    I += h * std::exp(-logE) * L;
    logE += drift * h + zy(k, 0);
    z += income.dZ(0, k);
    y[m + k + 1] = std::exp(logE) * (x0 + I);
    prefix[m + k + 1] = prefix[m + k] + h * (y[m + k] + y[m + k + 1]) / 2.0;
  }
  return out;
}

PicardResult picard_solve(const HistorySegment& x, const KernelProcess& kernel,
                          const MarketParams& params, double T, const Increments& noise,
                          const PicardOptions& options) {
  x.validate(kernel.horizon());
  const double h = x.step;
  const int N = horizon_steps(T, h);
  const int m = x.cells();
  check_noise(noise, params, N);
  CompiledKernel ck(kernel, h);

  const Eigen::VectorXd s = noise.dZ.leftCols(N).transpose() * (params.C1.transpose() * params.sigma_y) +
                            noise.dZstar.leftCols(N).transpose() * (params.C2.transpose() * params.sigma_y);
  const double sy2 = params.sigma_y.squaredNorm();
  const bool milstein = options.scheme == Scheme::Milstein;
  Eigen::VectorXd zpath(N + 1);
  zpath[0] = 0.0;
  for (int k = 0; k < N; ++k) zpath[k + 1] = zpath[k] + noise.dZ(0, k);

  Eigen::VectorXd y(m + N + 1), next(m + N + 1), prefix(m + N + 1), L(N + 1);
  y.head(m + 1) = x.values;
  y.tail(N).setConstant(x.x0());
  next.head(m + 1) = x.values;
  Eigen::VectorXd weight(N + 1);
  for (int k = 0; k <= N; ++k) weight[k] = std::exp(-options.alpha * k * h);

  PicardResult res;
  double prev_change = std::numeric_limits<double>::quiet_NaN();
  const double scale = std::max(1.0, x.values.cwiseAbs().maxCoeff());
  for (int it = 1; it <= options.max_iterations; ++it) {
    prefix[0] = 0.0;
    for (int i = 1; i < y.size(); ++i) prefix[i] = prefix[i - 1] + h * (y[i - 1] + y[i]) / 2.0;
    for (int k = 0; k <= N; ++k) L[k] = ck.apply(k * h, zpath[k], y.data() + k, prefix.data() + k);
    double acc = x.x0();
    next[m] = acc;
    for (int k = 0; k < N; ++k) {
      const double yk = y[m + k];
      acc += params.mu_y * h * (yk + y[m + k + 1]) / 2.0 + h * (L[k] + L[k + 1]) / 2.0 + yk * s[k];
      if (milstein) acc += 0.5 * yk * (s[k] * s[k] - sy2 * h);
      next[m + k + 1] = acc;
    }
    if (!next.allFinite()) throw NumericalBlowup("Picard iterate became non-finite", static_cast<std::size_t>(it));
    double sup = 0.0, weighted = 0.0;
    for (int k = 0; k <= N; ++k) {
      double d = std::abs(next[m + k] - y[m + k]);
      sup = std::max(sup, d);
      weighted = std::max(weighted, weight[k] * d);
    }
    if (std::isfinite(prev_change) && prev_change > 0.0) res.ratios.push_back(weighted / prev_change);
    prev_change = weighted;
    y.swap(next);
    res.iterations = it;
    if (sup <= options.tolerance * scale) {
      double logsum = 0.0;
      int cnt = 0;
      for (std::size_t i = 0; i < res.ratios.size() && cnt < 5; ++i) {
        if (res.ratios[i] > 0.0) {
          logsum += std::log(res.ratios[i]);
          ++cnt;
        }
      }
      res.contraction_ratio = cnt ? std::exp(logsum / cnt) : 0.0;
      res.path.step = h;
      res.path.window = m;
      res.path.full = y;
      res.path.dZ = noise.dZ.leftCols(N);
      res.path.dZstar = noise.dZstar.leftCols(N);
      return res;
    }
  }
  double ratio = res.ratios.empty() ? std::numeric_limits<double>::quiet_NaN() : res.ratios.back();
  throw ConvergenceError("Picard iteration did not converge within " +
                             std::to_string(options.max_iterations) +
                             " iterations (empirical contraction ratio " + std::to_string(ratio) + ")",
                         ratio);
}

std::optional<PositivityWitness> positivity_witness(const RadonMeasure& phi, double step, double c) {
  auto hj = hahn_jordan(phi);
  if (hj.mass_m <= 0.0) return std::nullopt;
  const double d = phi.horizon();
  const int m = window_cells(d, step);
  const auto pieces = negative_support(phi);
  auto dist = [&](double s) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [lo, hi] : pieces) {
      double dd = s < lo ? lo - s : (s > hi ? s - hi : 0.0);
      best = std::min(best, dd);
    }
    return best;
  };
  double eps = std::max(step, std::round(d / 4.0 / step) * step);
  for (;;) {
    GridFunction f{-d, step, Eigen::VectorXd(m + 1)};
    for (int i = 0; i <= m; ++i) f.values[i] = std::max(0.0, 1.0 - dist(-d + i * step) / eps);
    double integral = integrate(phi, f);
    if (integral < -hj.mass_m / 2.0 || eps <= step) {
      PositivityWitness w;
      w.x0 = c * hj.mass_m / 8.0;
      w.history = {step, f.values};
      w.history.values[m] = w.x0;
      w.epsilon = eps;
      w.integral = integral;
      w.mass_m = hj.mass_m;
      return w;
    }
    eps = std::max(step, std::round(eps / 2.0 / step) * step);
  }
}

CrossingEstimate crossing_fraction(const HistorySegment& x, const KernelProcess& kernel,
                                   const MarketParams& params, double horizon,
                                   const NoisePlan& plan, std::size_t n_paths, int threads,
                                   Scheme scheme) {
  x.validate(kernel.horizon());
  const int N = horizon_steps(horizon, x.step);
  plan.validate();
  CompiledKernel ck(kernel, x.step);
  std::vector<double> hit(n_paths, 0.0);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    CompiledKernel local = ck;
    IncomeStepper st(x, local, params, N, scheme);
    NoiseStream ns(plan, p);
    Eigen::VectorXd dZ(params.n()), dZs(params.n());
    double z = 0.0;
    for (int k = 0; k < N; ++k) {
      ns.next(dZ, dZs);
      double y = st.advance(st.delay_term(z), st.income_shock(dZ, dZs));
      z += dZ[0];
      if (y <= 0.0) {
        hit[p] = 1.0;
        return;
      }
    }
  });
  CrossingEstimate e;
  e.n_paths = n_paths;
  double count = pairwise_sum(hit);
  e.crossings = static_cast<std::size_t>(count);
  e.fraction = count / static_cast<double>(n_paths);
  e.std_error = std::sqrt(e.fraction * (1.0 - e.fraction) / static_cast<double>(n_paths));
  return e;
}

void write_income_csv(std::ostream& out, const IncomePath& path) {
  const auto n = path.dZ.rows();
  out << "t,y";
  for (Eigen::Index i = 0; i < n; ++i) out << ",dZ_" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) out << ",dZstar_" << i + 1;
  out << '\n' << std::setprecision(17);
  const int N = path.steps();
  for (int k = 0; k <= N; ++k) {
    out << k * path.step << ',' << path.y(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ',';
      if (k < N) out << path.dZ(i, k);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out << ',';
      if (k < N) out << path.dZstar(i, k);
    }
    out << '\n';
  }
}

NoisePlan make_noise_plan(const MarketParams& params, double step, std::uint64_t seed, int substeps) {
  NoisePlan plan;
  plan.n = params.n();
  plan.step = step;
  plan.substeps = substeps;
  plan.seed = seed;
  plan.C1 = params.C1;
  plan.C2 = params.C2;
  return plan;
}

}  // namespace sticky
