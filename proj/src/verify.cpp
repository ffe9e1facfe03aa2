#include "sticky/verify.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sticky {

nlohmann::json to_json(const Verdict& v) {
  return {{"check", v.check}, {"pass", v.pass}, {"statistic", v.statistic},
          {"tolerance", v.tolerance}, {"details", v.details}};
}

DoleansStudy doleans_study(double w, const HistoryFactory& history, const RadonMeasure& phi,
                           const MarketParams& params, double T, double h, std::size_t n_paths,
                           std::uint64_t seed, int threads, Scheme scheme) {
  std::vector<double> coarse, fine;
  for (int level = 0; level < 2; ++level) {
    const double step = level == 0 ? h : h / 2.0;
    HistorySegment x = history(step);
    PolicyConstants pc = policy_constants(phi, params, step);
    ControlledOptions opt;
    opt.T = T;
    opt.step = step;
    opt.substeps = level == 0 ? 2 : 1;
    opt.n_paths = n_paths;
    opt.seed = seed;
    opt.threads = threads;
    opt.scheme = scheme;
    opt.closed_form = true;
    auto run = simulate_controlled(w, x, KernelProcess::constant(phi), pc, params, opt);
    auto& dst = level == 0 ? coarse : fine;
    for (const auto& p : run.paths) dst.push_back(p.max_closed_gap);
  }
  DoleansStudy s;
  s.max_gap_coarse = *std::max_element(coarse.begin(), coarse.end());
  s.max_gap_fine = *std::max_element(fine.begin(), fine.end());
  s.mean_gap_coarse = pairwise_sum(coarse) / static_cast<double>(coarse.size());
  s.mean_gap_fine = pairwise_sum(fine) / static_cast<double>(fine.size());
  s.ratio = s.mean_gap_coarse / s.mean_gap_fine;
  return s;
}

std::vector<std::pair<std::string, Policy>> default_perturbations(const PolicyConstants& pc) {
  std::vector<std::pair<std::string, Policy>> out;
  Policy p;
  p.c_scale = 1.2;
  out.emplace_back("consumption x1.2", p);
  p = Policy{};
  p.c_scale = 0.8;
  out.emplace_back("consumption x0.8", p);
  p = Policy{};
  p.B_scale = 1.5;
  out.emplace_back("bequest x1.5", p);
  p = Policy{};
  p.gamma_loading = pc.loading * 1.5;
  out.emplace_back("risky tilt +50%", p);
  p = Policy{};
  p.gamma_loading = pc.loading * 0.5;
  out.emplace_back("risky tilt -50%", p);
  return out;
}

ValueCheck verify_value(double w, const HistorySegment& x, const RadonMeasure& phi,
                        const MarketParams& params, const ControlledOptions& options,
                        double n_sigma, bool with_perturbations) {
  const PolicyConstants pc = policy_constants(phi, params, x.step);
  const KernelProcess kernel = KernelProcess::constant(phi);
  const double G0 = total_wealth(w, x, pc);
  ValueCheck vc;
  vc.value = value_function(w, x, pc);

  ControlledOptions opt = options;
  opt.policy = Policy{};
  auto base = simulate_controlled(w, x, kernel, pc, params, opt);
  vc.optimal = estimate_J(base, opt.policy, pc, params, G0, opt.T);
  vc.statistic = std::abs(vc.optimal.mc.mean + vc.optimal.tail - vc.value);
  vc.tolerance = n_sigma * vc.optimal.mc.std_error + std::abs(vc.optimal.tail);
  vc.pass = vc.statistic <= vc.tolerance;
  if (!with_perturbations) return vc;

  for (const auto& [name, policy] : default_perturbations(pc)) {
    ControlledOptions po = options;
    po.policy = policy;
    auto run = simulate_controlled(w, x, kernel, pc, params, po);
    auto est = estimate_J(run, policy, pc, params, G0, po.T);
    std::vector<double> diff(run.paths.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = run.paths[i].utility - base.paths[i].utility;
    auto d = estimate(diff);
    PerturbationResult pr;
    pr.name = name;
    pr.analytic = policy_growth(policy, pc, params, G0).value;
    pr.diff_mean = d.mean + (est.tail - vc.optimal.tail);
    pr.diff_se = d.std_error;
    pr.worse = pr.diff_mean + 2.0 * pr.diff_se < 0.0;
    vc.perturbations.push_back(pr);
  }
  return vc;
}

PositivityScan positivity_scan(const HistorySegment& x, const KernelProcess& kernel,
                               const MarketParams& params, double T, const NoisePlan& plan,
                               std::size_t n_paths, int threads, Scheme scheme) {
  std::vector<double> count(n_paths), mins(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    auto path = simulate_income(x, kernel, params, T, plan, p, scheme);
    auto y = path.path();
    count[p] = static_cast<double>((y.array() <= 0.0).count());
    mins[p] = y.minCoeff();
  });
  PositivityScan s;
  s.n_paths = n_paths;
  s.nonpositive = static_cast<std::size_t>(pairwise_sum(count));
  s.min_value = *std::min_element(mins.begin(), mins.end());
  return s;
}

MonotonicityCheck monotonicity_check(const HistorySegment& x, const KernelProcess& phi,
                                     const KernelProcess& psi, const MarketParams& params,
                                     double T, const NoisePlan& plan, std::size_t n_paths,
                                     int threads, Scheme scheme) {
  std::vector<double> gap(n_paths), gap_pos(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t p) {
    auto a = simulate_income(x, phi, params, T, plan, p, scheme).path();
    auto b = simulate_income(x, psi, params, T, plan, p, scheme).path();
    Eigen::VectorXd d = b - a;
    gap[p] = d.minCoeff();
    gap_pos[p] = d.tail(d.size() - 1).minCoeff();
  });
  MonotonicityCheck m;
  m.min_gap = *std::min_element(gap.begin(), gap.end());
  m.min_gap_positive = *std::min_element(gap_pos.begin(), gap_pos.end());
  m.monotone = m.min_gap >= 0.0;
  m.strict = m.min_gap_positive > 0.0;
  return m;
}

PicardCheck picard_check(const HistorySegment& x, const KernelProcess& kernel,
                         const MarketParams& params, double T, const NoisePlan& plan,
                         std::size_t n_paths, double factor, int threads, Scheme scheme) {
  std::vector<double> gaps(n_paths), iters(n_paths);
  const int N = static_cast<int>(std::llround(T / x.step));
  parallel_for(n_paths, threads, [&](std::size_t p) {
    auto noise = generate_noise(plan, p, static_cast<std::size_t>(N));
    auto euler = simulate_income(x, kernel, params, T, noise, scheme);
    PicardOptions po;
    po.scheme = scheme;
    auto pic = picard_solve(x, kernel, params, T, noise, po);
    double scale = std::max(1.0, euler.full.cwiseAbs().maxCoeff());
    gaps[p] = (euler.full - pic.path.full).cwiseAbs().maxCoeff() / (x.step * scale);
    iters[p] = pic.iterations;
  });
  PicardCheck c;
  c.max_scaled_gap = *std::max_element(gaps.begin(), gaps.end());
  c.max_iterations = static_cast<int>(*std::max_element(iters.begin(), iters.end()));
  c.pass = c.max_scaled_gap <= factor;
  return c;
}

}  // namespace sticky
