#pragma once

#include "sticky/kernel.hpp"
#include "sticky/policy.hpp"

#include <string>
#include <vector>

namespace sticky {

inline constexpr const char* kPositiveHistoryCondition = "strictly positive initial income history";

class UncertaintySet {
 public:
  enum class Kind { Tube, Family };

  // {phi : center - radius <= phi <= center + radius}, radius >= 0.
  static UncertaintySet tube(RadonMeasure center, RadonMeasure radius);
  static UncertaintySet family(std::vector<RadonMeasure> members);

  Kind kind() const { return kind_; }
  const RadonMeasure& center() const { return members_.at(0); }
  const RadonMeasure& radius() const { return members_.at(1); }
  const std::vector<RadonMeasure>& members() const { return members_; }
  double horizon() const { return members_.front().horizon(); }

  // Order minimum; throws DomainError when a family's lattice minimum is
  // not a member.
  RadonMeasure minimum() const;
  // Largest element used by adversaries: center + radius, or the lattice
  // maximum of the family.
  RadonMeasure maximum() const;
  bool contains(const RadonMeasure& phi, double tol = 0.0) const;

 private:
  Kind kind_ = Kind::Family;
  std::vector<RadonMeasure> members_;
};

RadonMeasure order_minimum(const UncertaintySet& K);

struct AdversaryTemplate {
  std::string name;
  KernelProcess::Kind kind = KernelProcess::Kind::DeterministicTimeVarying;
  KernelProcess::Modulation lambda;  // values in [0, 1]
};

// D deterministic then S state-modulated templates; the first two are the
// constant extremes lambda = 0 and lambda = 1. Random frequencies and phases
// are drawn from `seed`.
std::vector<AdversaryTemplate> default_adversary_templates(double T, int D = 5, int S = 5,
                                                           std::uint64_t seed = 1);

// Builds the adversary kernel process for a template: for a tube
// nu + lambda (max - nu), for a family the member indexed by lambda. Its
// range is checked against K on a time grid over [0, T] and on driving
// values from a seeded Brownian path plus a fixed set of extremes; a
// violation throws DomainError naming (t, z, measure).
KernelProcess adversary_sampler(const UncertaintySet& K, const AdversaryTemplate& tmpl,
                                std::uint64_t seed, double T);

struct StressResult {
  std::string adversary;
  double min_gamma = 0.0;        // min over paths and times of the lower total wealth
  double max_shortfall = 0.0;    // max of Gamma_nu - Gamma_adv (should be <= band)
  double min_income_gap = 0.0;   // min of y_adv - y_nu
  bool income_monotone = true;
  bool wealth_monotone = true;
  bool admissible = true;
  bool utility_equal = true;     // J(pi*; adversary) == J(pi*; nu) bitwise
  double J_adversary = 0.0;
  double J_nu = 0.0;
  bool pass = true;
};

struct GameReport {
  double robust_value = 0.0;
  double value_at_nu = 0.0;  // value function evaluated independently at nu
  bool reduction_exact = false;
  RadonMeasure nu;
  PolicyConstants constants;
  double total_wealth = 0.0;
  ControlTriplet initial_controls;
  std::vector<AssumptionCheck> assumptions;
  std::vector<StressResult> stress;
  double band = 0.0;
  bool stress_pass = true;
};

// Robust problem reduced to the order minimum: value and saddle controls of
// the nu problem. Throws AssumptionViolation when the robust admissibility
// condition fails or the history has a nonpositive node, and
// AdmissibilityViolation when (w, x) is outside the nu half-space.
GameReport solve_robust(double w, const HistorySegment& x, const UncertaintySet& K,
                        const MarketParams& params);

struct StressOptions {
  double T = 1.0;
  std::size_t n_paths = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  int deterministic = 5;
  int modulated = 5;
  Scheme scheme = Scheme::Milstein;
};

// Replays the nu-feedback controls open-loop under each sampled adversary on
// common noise and checks admissibility, income and wealth monotonicity,
// and the invariance of J.
GameReport stress_saddle(double w, const HistorySegment& x, const UncertaintySet& K,
                         const MarketParams& params, const StressOptions& options);

}  // namespace sticky
