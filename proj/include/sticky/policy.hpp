#pragma once

#include "sticky/history.hpp"
#include "sticky/kernel.hpp"
#include "sticky/labor_sdde.hpp"
#include "sticky/mc.hpp"
#include "sticky/params.hpp"
#include "sticky/rng.hpp"
#include "sticky/valuation.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace sticky {

struct ControlTriplet {
  double c = 0.0;
  double B = 0.0;
  Eigen::VectorXd theta;
};

struct ControlledState {
  double t = 0.0;
  double W = 0.0;
  HistorySegment history;
  double Gamma = 0.0;
};

// f^gamma G^{1-gamma} / (1 - gamma) at G = total wealth. On the boundary band
// returns 0 for gamma < 1 and -infinity for gamma > 1; throws
// AdmissibilityViolation below it.
double value_function(double w, const HistorySegment& x, const PolicyConstants& pc);
double value_at_total_wealth(double G, const PolicyConstants& pc, double band = 0.0);

// c = Gamma / f, B = k^{-b} Gamma / f,
// theta = merton Gamma - g y (sigma')^{-1} C1' sigma_y.
ControlTriplet feedback_controls(double Gamma, double y, const PolicyConstants& pc);
ControlTriplet feedback_controls(const ControlledState& state, const PolicyConstants& pc);

double hamiltonian_cv(const ControlTriplet& u, double x0, double p1, double P11, double P12,
                      const MarketParams& params);

struct HamiltonianPoint {
  ControlTriplet controls;
  double value = 0.0;
};

// Maximizers of the control part of the Hamiltonian for p1 > 0, P11 < 0.
HamiltonianPoint hamiltonian_maximizers(double x0, double p1, double P11, double P12,
                                        const MarketParams& params);

// A policy in the closed-form family: c = c_scale Gamma / f,
// B = B_scale k^{-b} Gamma / f and sigma' theta = Gamma a - g y C1' sigma_y
// with Gamma loading a (kappa / gamma when unset).
struct Policy {
  double c_scale = 1.0;
  double B_scale = 1.0;
  std::optional<Eigen::VectorXd> gamma_loading;
};

struct PolicyGrowth {
  Eigen::VectorXd loading;
  double drift = 0.0;          // drift rate of Gamma under perfect correlation
  double utility_rate = 0.0;   // decay rate of the expected discounted utility flow
  double value = 0.0;          // J of the policy from Gamma0 (requires utility_rate > 0)
};

// Closed-form growth and value of a policy under perfect correlation. For
// the optimal policy `value` equals the value function.
PolicyGrowth policy_growth(const Policy& policy, const PolicyConstants& pc,
                           const MarketParams& params, double Gamma0);

// Per-step controls and their realized wealth contributions, recorded so a
// run can be replayed open-loop under a different kernel.
struct ControlTape {
  Eigen::VectorXd c, B;
  Eigen::VectorXd excess;  // theta' (mu - r 1)
  Eigen::VectorXd gain;    // realized theta' sigma dZ over the step (scheme included)
};

struct PathRecord {
  Eigen::VectorXd W, y, Gamma, c, B;
  Eigen::MatrixXd theta;  // n x (N + 1)
  Eigen::VectorXd gamma_closed;
};

struct ControlledOptions {
  double T = 1.0;
  double step = 0.01;
  int substeps = 1;
  std::size_t n_paths = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  Scheme scheme = Scheme::Milstein;
  Policy policy;
  bool record = false;
  bool closed_form = false;   // track Gamma closed form on the same noise
  double band_factor = 10.0;  // leak tolerance = band_factor * h * scale
  bool strict = false;        // throw AdmissibilityViolation beyond the band
};

struct ControlledPath {
  double utility = 0.0;        // trapezoid of the discounted utility flow on [0, T]
  double max_deficit = 0.0;    // largest clipped -Gamma
  double min_gamma = 0.0;
  double max_closed_gap = 0.0; // sup relative gap to the closed form
  std::optional<PathRecord> record;
  std::optional<ControlTape> tape;
};

struct ControlledRun {
  std::vector<ControlledPath> paths;
  double band = 0.0;
  double max_deficit = 0.0;
};

// Joint simulation of wealth and income under a feedback policy. Gamma is
// recomputed from (W, income window) at every step; negative leaks are
// clipped at 0 for the controls and reported.
ControlledRun simulate_controlled(double w, const HistorySegment& x, const KernelProcess& kernel,
                                  const PolicyConstants& pc, const MarketParams& params,
                                  const ControlledOptions& options);

// One path; `replay` switches to open-loop controls from a tape (the Gamma
// accounting still uses `pc`). `keep_tape` stores the tape of this run.
ControlledPath simulate_controlled_path(double w, const HistorySegment& x,
                                        const CompiledKernel& kernel, const PolicyConstants& pc,
                                        const MarketParams& params, const ControlledOptions& options,
                                        const NoisePlan& plan, std::uint64_t path,
                                        const ControlTape* replay, bool keep_tape);

// Gamma0 exp((drift - |a|^2 / 2) t + a' Z(t)) on the grid of dZ (n x N),
// a = kappa / gamma and drift from the optimal policy.
Eigen::VectorXd gamma_closed_form(double Gamma0, const MarketParams& params,
                                  const PolicyConstants& pc, const Eigen::MatrixXd& dZ, double step);

// Discounted utility of sampled c, B on [0, T] by the trapezoid rule.
double discounted_utility(const Eigen::VectorXd& c, const Eigen::VectorXd& B, double step,
                          const MarketParams& params);

struct UtilityEstimate {
  Estimate mc;
  double tail = 0.0;        // expected value beyond T (closed form, perfect correlation)
  bool tail_diverges = false;
};

UtilityEstimate estimate_J(const ControlledRun& run, const Policy& policy, const PolicyConstants& pc,
                           const MarketParams& params, double Gamma0, double T);

}  // namespace sticky
