#include "sticky/policy.hpp"

#include "sticky/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sticky {

namespace {

double utility(double x, double gamma) {
  if (x <= 0.0) return gamma < 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return std::pow(x, 1.0 - gamma) / (1.0 - gamma);
}

}  // namespace

double value_at_total_wealth(double G, const PolicyConstants& pc, double band) {
  if (G < -band) {
    std::ostringstream os;
    os << "total wealth " << G << " is outside the admissible half-space";
    throw AdmissibilityViolation(os.str(), -G);
  }
  if (G <= band) return pc.gamma < 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return std::pow(pc.f, pc.gamma) * std::pow(G, 1.0 - pc.gamma) / (1.0 - pc.gamma);
}

double value_function(double w, const HistorySegment& x, const PolicyConstants& pc) {
  double G = total_wealth(w, x, pc);
  return value_at_total_wealth(G, pc, boundary_band(w, x.x0()));
}

ControlTriplet feedback_controls(double Gamma, double y, const PolicyConstants& pc) {
  if (Gamma < 0.0) {
    std::ostringstream os;
    os << "feedback controls need Gamma >= 0, got " << Gamma;
    throw AdmissibilityViolation(os.str(), -Gamma);
  }
  ControlTriplet u;
  u.c = Gamma / pc.f;
  u.B = pc.bequest_factor * Gamma / pc.f;
  u.theta = pc.merton * Gamma - pc.g * y * pc.hedge;
  return u;
}

ControlTriplet feedback_controls(const ControlledState& state, const PolicyConstants& pc) {
  return feedback_controls(state.Gamma, state.history.x0(), pc);
}

double hamiltonian_cv(const ControlTriplet& u, double x0, double p1, double P11, double P12,
                      const MarketParams& params) {
  const double g = params.gamma;
  Eigen::VectorXd excess = params.mu.array() - params.r;
  Eigen::VectorXd st = params.sigma.transpose() * u.theta;
  Eigen::VectorXd cross = params.C1.transpose() * params.sigma_y;
  return utility(u.c, g) - u.c * p1 + params.delta * utility(params.k * u.B, g) -
         params.delta * u.B * p1 + u.theta.dot(excess) * p1 + 0.5 * st.squaredNorm() * P11 +
         st.dot(cross) * x0 * P12;
}

HamiltonianPoint hamiltonian_maximizers(double x0, double p1, double P11, double P12,
                                        const MarketParams& params) {
  if (!(p1 > 0.0) || !(P11 < 0.0)) {
    std::ostringstream os;
    os << "Hamiltonian is +infinity or degenerate (p1 = " << p1 << ", P11 = " << P11
       << "); maximizers need p1 > 0 and P11 < 0";
    throw DomainError(os.str());
  }
  const double g = params.gamma;
  const double b = 1.0 - 1.0 / g;
  HamiltonianPoint out;
  out.controls.c = std::pow(p1, -1.0 / g);
  out.controls.B = std::pow(params.k, -b) * std::pow(p1, -1.0 / g);
  Eigen::VectorXd excess = params.mu.array() - params.r;
  Eigen::VectorXd rhs = excess * p1 + params.sigma * (params.C1.transpose() * params.sigma_y) * x0 * P12;
  Eigen::MatrixXd cov = params.sigma * params.sigma.transpose();
  out.controls.theta = -cov.ldlt().solve(rhs) / P11;
  out.value = hamiltonian_cv(out.controls, x0, p1, P11, P12, params);
  return out;
}

PolicyGrowth policy_growth(const Policy& policy, const PolicyConstants& pc,
                           const MarketParams& params, double Gamma0) {
  PolicyGrowth g;
  g.loading = policy.gamma_loading.value_or(pc.loading);
  const double gm = pc.gamma;
  g.drift = params.r + params.delta + g.loading.dot(pc.kappa) -
            (policy.c_scale + params.delta * pc.bequest_factor * policy.B_scale) / pc.f;
  g.utility_rate = params.rho + params.delta -
                   (1.0 - gm) * (g.drift - 0.5 * gm * g.loading.squaredNorm());
  const double flow = std::pow(policy.c_scale, 1.0 - gm) +
                      params.delta * pc.bequest_factor * std::pow(policy.B_scale, 1.0 - gm);
  g.value = g.utility_rate > 0.0
                ? std::pow(Gamma0 / pc.f, 1.0 - gm) * flow / ((1.0 - gm) * g.utility_rate)
                : std::numeric_limits<double>::quiet_NaN();
  return g;
}

ControlledPath simulate_controlled_path(double w, const HistorySegment& x,
                                        const CompiledKernel& kernel, const PolicyConstants& pc,
                                        const MarketParams& params, const ControlledOptions& opt,
                                        const NoisePlan& plan, std::uint64_t path,
                                        const ControlTape* replay, bool keep_tape) {
  const double h = opt.step;
  const int N = static_cast<int>(std::llround(opt.T / h));
  const int n = params.n();
  IncomeStepper st(x, kernel, params, N, opt.scheme);
  NoiseStream ns(plan, path);
  if (replay && replay->c.size() != N + 1) throw DomainError("control tape length does not match the run");

  const Eigen::VectorXd a = opt.policy.gamma_loading.value_or(pc.loading);
  const Eigen::VectorXd& v = pc.income_loading;
  const Eigen::VectorXd wz = params.C2.transpose() * params.sigma_y;
  const Eigen::VectorXd amv = a - v;
  const double a2 = a.squaredNorm(), v2 = v.squaredNorm();
  const bool milstein = opt.scheme == Scheme::Milstein;
  const bool idio = plan.has_idiosyncratic();
  const double c_rate = opt.policy.c_scale / pc.f;
  const double B_rate = opt.policy.B_scale * pc.bequest_factor / pc.f;
  const double disc = params.rho + params.delta;
  const double grow = params.r + params.delta;
  const auto sigmaT = params.sigma.transpose().partialPivLu();
  const double scale = std::max(1.0, std::abs(w) + pc.g * x.values.cwiseAbs().maxCoeff());
  const double band = opt.band_factor * h * scale;

  PolicyGrowth pg;
  if (opt.closed_form) pg = policy_growth(opt.policy, pc, params, 1.0);
  const double log_rate = pg.drift - 0.5 * a2;

  ControlledPath out;
  if (opt.record) {
    PathRecord r;
    r.W.resize(N + 1);
    r.y.resize(N + 1);
    r.Gamma.resize(N + 1);
    r.c.resize(N + 1);
    r.B.resize(N + 1);
    r.theta.resize(n, N + 1);
    if (opt.closed_form) r.gamma_closed.resize(N + 1);
    out.record = std::move(r);
  }
  ControlTape tape;
  if (keep_tape) {
    tape.c.resize(N + 1);
    tape.B.resize(N + 1);
    tape.excess.resize(N + 1);
    tape.gain.resize(N + 1);
  }

  Eigen::VectorXd dZ(n), dZs(n), q(n);
  double W = w;
  double z = 0.0;
  double Gamma0 = 0.0, log_closed = 0.0;
  double prev_flow = 0.0, util = 0.0;
  out.min_gamma = std::numeric_limits<double>::infinity();

  for (int k = 0; k <= N; ++k) {
    const double y = st.y();
    const double G = total_wealth(W, st.window_values(), pc);
    out.min_gamma = std::min(out.min_gamma, G);
    if (G < 0.0) {
      out.max_deficit = std::max(out.max_deficit, -G);
      if (opt.strict && -G > band) {
        std::ostringstream os;
        os << "total wealth leaked to " << G << " at t = " << k * h << " (band " << band << ")";
        throw AdmissibilityViolation(os.str(), -G);
      }
    }
    const double Gp = std::max(G, 0.0);
    if (k == 0) Gamma0 = Gp;
    if (opt.closed_form && Gamma0 > 0.0) {
      double closed = Gamma0 * std::exp(log_closed);
      out.max_closed_gap = std::max(out.max_closed_gap, std::abs(G - closed) / closed);
      if (out.record) out.record->gamma_closed[k] = closed;
    }

    double c, B, excess;
    if (replay) {
      c = replay->c[k];
      B = replay->B[k];
      excess = replay->excess[k];
    } else {
      c = c_rate * Gp;
      B = B_rate * Gp;
      q = Gp * a - pc.g * y * v;
      excess = q.dot(pc.kappa);
    }
    if (keep_tape) {
      tape.c[k] = c;
      tape.B[k] = B;
      tape.excess[k] = excess;
    }
    if (out.record) {
      out.record->W[k] = W;
      out.record->y[k] = y;
      out.record->Gamma[k] = G;
      out.record->c[k] = c;
      out.record->B[k] = B;
      if (replay) {
        out.record->theta.col(k).setConstant(std::numeric_limits<double>::quiet_NaN());
      } else {
        out.record->theta.col(k) = sigmaT.solve(q);
      }
    }
    const double flow = std::exp(-disc * k * h) *
                        (utility(c, params.gamma) + params.delta * utility(params.k * B, params.gamma));
    if (k > 0) util += 0.5 * h * (prev_flow + flow);
    prev_flow = flow;
    if (k == N) {
      if (keep_tape) tape.gain[k] = 0.0;
      break;
    }

    ns.next(dZ, dZs);
    double gain;
    if (replay) {
      gain = replay->gain[k];
    } else {
      gain = q.dot(dZ);
      if (milstein) {
        const double az = a.dot(dZ), vz = v.dot(dZ);
        gain += 0.5 * Gp * (az * az - a2 * h) - 0.5 * pc.g * y * (vz * vz - v2 * h);
        if (idio) gain += 0.5 * pc.g * y * wz.dot(dZs) * amv.dot(dZ);
      }
    }
    if (keep_tape) tape.gain[k] = gain;
    const double delay = st.delay_term(z);
    W += (grow * W + excess + y - c - params.delta * B) * h + gain;
    if (!std::isfinite(W)) throw NumericalBlowup("wealth became non-finite", static_cast<std::size_t>(k));
    st.advance(delay, st.income_shock(dZ, dZs));
    z += dZ[0];
    if (opt.closed_form) log_closed += log_rate * h + a.dot(dZ);
  }
  out.utility = util;
  if (keep_tape) out.tape = std::move(tape);
  return out;
}

ControlledRun simulate_controlled(double w, const HistorySegment& x, const KernelProcess& kernel,
                                  const PolicyConstants& pc, const MarketParams& params,
                                  const ControlledOptions& opt) {
  params.validate();
  x.validate(kernel.horizon());
  if (std::abs(x.step - opt.step) > 1e-15 * opt.step) throw DomainError("history grid differs from the simulation step");
  double ratio = opt.T / opt.step;
  if (std::abs(ratio - std::round(ratio)) > 1e-8 * std::max(1.0, ratio)) throw DomainError("grid step h does not divide the horizon T");
  const double G0 = total_wealth(w, x, pc);
  if (classify_wealth(G0, w, x.x0()) == WealthRegion::Exterior) {
    std::ostringstream os;
    os << "initial total wealth " << G0 << " is negative";
    throw AdmissibilityViolation(os.str(), -G0);
  }
  NoisePlan plan = make_noise_plan(params, opt.step, opt.seed, opt.substeps);
  plan.validate();
  const CompiledKernel ck(kernel, opt.step);

  ControlledRun run;
  run.paths.resize(opt.n_paths);
  parallel_for(opt.n_paths, opt.threads, [&](std::size_t p) {
    CompiledKernel local = ck;
    run.paths[p] = simulate_controlled_path(w, x, local, pc, params, opt, plan, p, nullptr, false);
  });
  const double scale = std::max(1.0, std::abs(w) + pc.g * x.values.cwiseAbs().maxCoeff());
  run.band = opt.band_factor * opt.step * scale;
  for (const auto& p : run.paths) run.max_deficit = std::max(run.max_deficit, p.max_deficit);
  return run;
}

Eigen::VectorXd gamma_closed_form(double Gamma0, const MarketParams& params,
                                  const PolicyConstants& pc, const Eigen::MatrixXd& dZ, double step) {
  if (Gamma0 < 0.0) throw DomainError("closed-form total wealth needs Gamma0 >= 0");
  const auto N = dZ.cols();
  Eigen::VectorXd out(N + 1);
  const double drift = params.r + params.delta + pc.kappa.squaredNorm() / pc.gamma -
                       (1.0 + params.delta * pc.bequest_factor) / pc.f;
  const double rate = drift - pc.loading.squaredNorm() / 2.0;
  double logz = 0.0;
  out[0] = Gamma0;
  for (Eigen::Index k = 0; k < N; ++k) {
    logz += pc.loading.dot(dZ.col(k));
    out[k + 1] = Gamma0 * std::exp(rate * step * static_cast<double>(k + 1) + logz);
  }
  return out;
}

double discounted_utility(const Eigen::VectorXd& c, const Eigen::VectorXd& B, double step,
                          const MarketParams& params) {
  if (c.size() != B.size() || c.size() < 2) throw DomainError("consumption and bequest paths must match");
  const double disc = params.rho + params.delta;
  double acc = 0.0, prev = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    double flow = std::exp(-disc * step * static_cast<double>(k)) *
                  (utility(c[k], params.gamma) + params.delta * utility(params.k * B[k], params.gamma));
    if (k > 0) acc += 0.5 * step * (prev + flow);
    prev = flow;
  }
  return acc;
}

UtilityEstimate estimate_J(const ControlledRun& run, const Policy& policy, const PolicyConstants& pc,
                           const MarketParams& params, double Gamma0, double T) {
  std::vector<double> u(run.paths.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = run.paths[i].utility;
  UtilityEstimate out;
  auto g = policy_growth(policy, pc, params, Gamma0);
  if (!(g.utility_rate > 1e-12)) {
    out.tail_diverges = true;
    out.tail = std::numeric_limits<double>::infinity();
  } else {
    out.tail = g.value * std::exp(-g.utility_rate * T);
  }
  out.mc = estimate(u, std::abs(out.tail));
  return out;
}

}  // namespace sticky
