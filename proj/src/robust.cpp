#include "sticky/robust.hpp"

#include "sticky/errors.hpp"
#include "sticky/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sticky {

namespace {

bool below_or_equal(const RadonMeasure& a, const RadonMeasure& b, double tol) {
  auto rel = compare(a, b, tol);
  return rel == OrderRelation::LessOrEqual || rel == OrderRelation::Equal;
}

std::string describe(const RadonMeasure& m) {
  std::ostringstream os;
  os << "{atoms:";
  for (const auto& a : m.atoms()) os << " (" << a.location << ", " << a.weight << ")";
  os << "; density:";
  for (const auto& p : m.density()) os << " [" << p.start << ": " << p.value << "]";
  os << "}";
  return os.str();
}

// Uniform in [0, 1) from the auxiliary stream.
double uniform(std::uint64_t seed, std::uint32_t index) {
  auto g = gaussian4(seed, Purpose::Auxiliary, index, 0, 0, 7);
  return 0.5 * std::erfc(-g[0] / std::numbers::sqrt2);
}

}  // namespace

UncertaintySet UncertaintySet::tube(RadonMeasure center, RadonMeasure radius) {
  if (!same_window(center, radius)) throw DomainError("tube center and radius on different windows");
  if (!is_nonnegative(radius)) throw DomainError("tube radius must be a nonnegative measure");
  UncertaintySet K;
  K.kind_ = Kind::Tube;
  K.members_ = {std::move(center), std::move(radius)};
  return K;
}

UncertaintySet UncertaintySet::family(std::vector<RadonMeasure> members) {
  if (members.empty()) throw DomainError("uncertainty family is empty");
  for (const auto& m : members)
    if (!same_window(m, members.front())) throw DomainError("family members on different windows");
  UncertaintySet K;
  K.kind_ = Kind::Family;
  K.members_ = std::move(members);
  return K;
}

RadonMeasure UncertaintySet::minimum() const {
  if (kind_ == Kind::Tube) return center() - radius();
  RadonMeasure inf = members_.front();
  for (std::size_t i = 1; i < members_.size(); ++i) inf = lattice_min(inf, members_[i]);
  for (const auto& m : members_)
    if (m == inf) return inf;
  throw DomainError("no order minimum: the lattice minimum of the family " + describe(inf) +
                    " is not a member");
}

RadonMeasure UncertaintySet::maximum() const {
  if (kind_ == Kind::Tube) return center() + radius();
  RadonMeasure sup = members_.front();
  for (std::size_t i = 1; i < members_.size(); ++i) sup = lattice_max(sup, members_[i]);
  return sup;
}

bool UncertaintySet::contains(const RadonMeasure& phi, double tol) const {
  if (kind_ == Kind::Tube) {
    return below_or_equal(center() - radius(), phi, tol) && below_or_equal(phi, center() + radius(), tol);
  }
  for (const auto& m : members_)
    if (compare(m, phi, tol) == OrderRelation::Equal) return true;
  return false;
}

RadonMeasure order_minimum(const UncertaintySet& K) { return K.minimum(); }

std::vector<AdversaryTemplate> default_adversary_templates(double T, int D, int S,
                                                           std::uint64_t seed) {
  using Kind = KernelProcess::Kind;
  std::vector<AdversaryTemplate> out;
  std::uint32_t draw = 0;
  auto det = [&](int i) -> AdversaryTemplate {
    switch (i) {
      case 0: return {"constant-minimum", Kind::DeterministicTimeVarying, [](double, double) { return 0.0; }};
      case 1: return {"constant-maximum", Kind::DeterministicTimeVarying, [](double, double) { return 1.0; }};
      case 2: return {"linear-decay", Kind::DeterministicTimeVarying,
                      [T](double t, double) { return std::clamp((T - t) / T, 0.0, 1.0); }};
      case 3: return {"linear-rise", Kind::DeterministicTimeVarying,
                      [T](double t, double) { return std::clamp(t / T, 0.0, 1.0); }};
      default: {
        double omega = 2.0 * std::numbers::pi * (0.5 + 4.0 * uniform(seed, draw++)) / T;
        double phase = 2.0 * std::numbers::pi * uniform(seed, draw++);
        std::ostringstream os;
        os << "oscillating(omega=" << omega << ",phase=" << phase << ")";
        return {os.str(), Kind::DeterministicTimeVarying,
                [omega, phase](double t, double) { return 0.5 * (1.0 + std::sin(omega * t + phase)); }};
      }
    }
  };
  auto mod = [&](int i) -> AdversaryTemplate {
    switch (i) {
      case 0: return {"inverse-quadratic", Kind::StateModulated,
                      [](double, double z) { return 1.0 / (1.0 + z * z); }};
      case 1: return {"quadratic-ratio", Kind::StateModulated,
                      [](double, double z) { return z * z / (1.0 + z * z); }};
      case 2: return {"normal-cdf", Kind::StateModulated,
                      [](double, double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }};
      case 3: {
        double a = 0.5 + 4.0 * uniform(seed, draw++);
        std::ostringstream os;
        os << "logistic(a=" << a << ")";
        return {os.str(), Kind::StateModulated,
                [a](double, double z) { return 0.5 * (1.0 + std::tanh(a * z)); }};
      }
      default: {
        double c = 2.0 * uniform(seed, draw++) - 1.0;
        std::ostringstream os;
        os << "indicator(z>" << c << ")";
        return {os.str(), Kind::StateModulated, [c](double, double z) { return z > c ? 1.0 : 0.0; }};
      }
    }
  };
  for (int i = 0; i < D; ++i) out.push_back(det(i));
  for (int i = 0; i < S; ++i) out.push_back(mod(i));
  return out;
}

KernelProcess adversary_sampler(const UncertaintySet& K, const AdversaryTemplate& tmpl,
                                std::uint64_t seed, double T) {
  const RadonMeasure nu = K.minimum();
  KernelProcess proc;
  if (K.kind() == UncertaintySet::Kind::Tube) {
    const RadonMeasure top = K.maximum();
    double tv = std::max(total_variation(nu), total_variation(top));
    if (tmpl.kind == KernelProcess::Kind::StateModulated) {
      proc = KernelProcess::state_modulated(nu, top - nu, tmpl.lambda, tv);
    } else {
      auto f = tmpl.lambda;
      proc = KernelProcess::time_varying(nu, top - nu, [f](double t) { return f(t, 0.0); }, tv);
    }
  } else {
    double tv = 0.0;
    for (const auto& m : K.members()) tv = std::max(tv, total_variation(m));
    proc = KernelProcess::switching(K.members(), tmpl.kind, tmpl.lambda, tv);
  }

  constexpr int kTimes = 50;
  std::vector<double> zs{-5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0};
  double z = 0.0;
  for (int i = 0; i <= kTimes; ++i) {
    const double t = T * i / kTimes;
    if (i > 0) z += std::sqrt(T / kTimes) * gaussian4(seed, Purpose::Auxiliary, i, 0, 0, 11)[0];
    zs.push_back(z);
    for (double zz : zs) {
      double lam = proc.lambda(t, zz);
      RadonMeasure phi(K.horizon());
      bool ok = lam >= 0.0 && lam <= 1.0;
      if (ok) {
        phi = sample_kernel(proc, t, {zz});
        ok = K.contains(phi, 1e-12);
      }
      if (!ok) {
        std::ostringstream os;
        os << "adversary '" << tmpl.name << "' leaves the uncertainty set at t = " << t
           << ", z = " << zz << " (lambda = " << lam << "): " << describe(phi);
        throw DomainError(os.str());
      }
    }
    zs.pop_back();
  }
  return proc;
}

GameReport solve_robust(double w, const HistorySegment& x, const UncertaintySet& K,
                        const MarketParams& params) {
  GameReport rep;
  rep.nu = K.minimum();
  x.validate(rep.nu.horizon());
  if ((x.values.array() <= 0.0).any()) {
    throw AssumptionViolation(kPositiveHistoryCondition, "the robust reduction needs x > 0 at every node");
  }
  rep.assumptions = check_assumptions(rep.nu, params, x.step, true);
  for (const auto& a : rep.assumptions)
    if (!a.pass) throw AssumptionViolation(a.name, a.details);
  rep.constants = policy_constants(rep.nu, params, x.step);
  rep.total_wealth = total_wealth(w, x, rep.constants);
  const double band = boundary_band(w, x.x0());
  if (classify_wealth(rep.total_wealth, w, x.x0()) == WealthRegion::Exterior) {
    std::ostringstream os;
    os << "robust admissible set is empty: total wealth at the order minimum is " << rep.total_wealth;
    throw AdmissibilityViolation(os.str(), -rep.total_wealth);
  }
  rep.robust_value = value_at_total_wealth(rep.total_wealth, rep.constants, band);
  rep.value_at_nu = value_function(w, x, policy_constants(rep.nu, params, x.step));
  rep.reduction_exact = rep.robust_value == rep.value_at_nu;
  rep.initial_controls = feedback_controls(std::max(rep.total_wealth, 0.0), x.x0(), rep.constants);
  return rep;
}

GameReport stress_saddle(double w, const HistorySegment& x, const UncertaintySet& K,
                         const MarketParams& params, const StressOptions& so) {
  GameReport rep = solve_robust(w, x, K, params);
  const auto& pc = rep.constants;
  ControlledOptions opt;
  opt.T = so.T;
  opt.step = x.step;
  opt.scheme = so.scheme;
  opt.record = true;
  NoisePlan plan = make_noise_plan(params, x.step, so.seed);
  plan.validate();
  const double scale = std::max(1.0, std::abs(w) + pc.g * x.values.cwiseAbs().maxCoeff());
  rep.band = opt.band_factor * x.step * scale;
  const double fp_tol = 1e-12 * scale;

  const CompiledKernel nu_kernel(KernelProcess::constant(rep.nu), x.step);
  const auto templates = default_adversary_templates(so.T, so.deterministic, so.modulated, so.seed);
  for (std::size_t a = 0; a < templates.size(); ++a) {
    const KernelProcess proc = adversary_sampler(K, templates[a], so.seed + 7919 * (a + 1), so.T);
    const CompiledKernel adv_kernel(proc, x.step);
    std::vector<StressResult> per(so.n_paths);
    std::vector<double> j_adv(so.n_paths), j_nu(so.n_paths);
    parallel_for(so.n_paths, so.threads, [&](std::size_t p) {
      CompiledKernel nk = nu_kernel, ak = adv_kernel;
      auto base = simulate_controlled_path(w, x, nk, pc, params, opt, plan, p, nullptr, true);
      auto adv = simulate_controlled_path(w, x, ak, pc, params, opt, plan, p, &*base.tape, false);
      const auto& rb = *base.record;
      const auto& ra = *adv.record;
      StressResult& s = per[p];
      s.min_gamma = ra.Gamma.minCoeff();
      s.max_shortfall = (rb.Gamma - ra.Gamma).maxCoeff();
      s.min_income_gap = (ra.y - rb.y).minCoeff();
      j_adv[p] = adv.utility;
      j_nu[p] = base.utility;
      s.utility_equal = adv.utility == base.utility;
    });
    StressResult r;
    r.adversary = templates[a].name;
    r.min_gamma = per.front().min_gamma;
    r.max_shortfall = per.front().max_shortfall;
    r.min_income_gap = per.front().min_income_gap;
    for (const auto& s : per) {
      r.min_gamma = std::min(r.min_gamma, s.min_gamma);
      r.max_shortfall = std::max(r.max_shortfall, s.max_shortfall);
      r.min_income_gap = std::min(r.min_income_gap, s.min_income_gap);
      r.utility_equal = r.utility_equal && s.utility_equal;
    }
    r.J_adversary = pairwise_sum(j_adv) / static_cast<double>(so.n_paths);
    r.J_nu = pairwise_sum(j_nu) / static_cast<double>(so.n_paths);
    r.income_monotone = r.min_income_gap >= -fp_tol;
    r.wealth_monotone = r.max_shortfall <= rep.band;
    r.admissible = r.min_gamma >= -rep.band;
    r.pass = r.income_monotone && r.wealth_monotone && r.admissible && r.utility_equal &&
             r.J_adversary == r.J_nu;
    rep.stress_pass = rep.stress_pass && r.pass;
    rep.stress.push_back(r);
  }
  return rep;
}

}  // namespace sticky
