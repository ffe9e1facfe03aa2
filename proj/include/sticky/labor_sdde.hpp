#pragma once

#include "sticky/history.hpp"
#include "sticky/kernel.hpp"
#include "sticky/mc.hpp"
#include "sticky/params.hpp"
#include "sticky/rng.hpp"

#include <optional>
#include <ostream>
#include <vector>

namespace sticky {

// Euler adds the drift and y sigma_y' dZ^y; Milstein also adds
// y ((sigma_y' dZ^y)^2 - |sigma_y|^2 h) / 2, which lifts the strong order
// from 1/2 to 1 for the multiplicative income noise.
enum class Scheme { Euler, Milstein };

const char* to_string(Scheme s);

// Advances one income path step by step on a growing buffer; shared by the
// income, wealth and valuation simulators.
class IncomeStepper {
 public:
  IncomeStepper(const HistorySegment& x, const CompiledKernel& kernel, const MarketParams& params,
                int steps, Scheme scheme);

  int k() const { return k_; }
  double y() const { return full_[window_ + k_]; }
  // Window values / prefix sums for the current step's delay window.
  const double* window_values() const { return full_.data() + k_; }
  const double* window_prefix() const { return prefix_.data() + k_; }
  // Current delay integral (kernel sampled at t_k with driving value z).
  double delay_term(double z) const;
  // Income noise s = sigma_y' dZ^y for the step.
  double income_shock(const Eigen::VectorXd& dZ, const Eigen::VectorXd& dZstar) const;
  // Advances with the given delay term and income shock; returns y(t_{k+1}).
  double advance(double delay, double shock);

  const Eigen::VectorXd& full() const { return full_; }
  int window() const { return window_; }

 private:
  const CompiledKernel* kernel_;
  double h_;
  double mu_y_;
  double sy2_;
  Eigen::VectorXd sigma_c1_;  // C1' sigma_y
  Eigen::VectorXd sigma_c2_;  // C2' sigma_y
  bool milstein_;
  int window_;
  int k_ = 0;
  Eigen::VectorXd full_;
  Eigen::VectorXd prefix_;
};

IncomePath simulate_income(const HistorySegment& x, const KernelProcess& kernel,
                           const MarketParams& params, double T, const Increments& noise,
                           Scheme scheme = Scheme::Milstein);

IncomePath simulate_income(const HistorySegment& x, const KernelProcess& kernel,
                           const MarketParams& params, double T, const NoisePlan& plan,
                           std::uint64_t path, Scheme scheme = Scheme::Milstein);

// Single path (index 0) on the history's grid, noise seeded by `seed`.
IncomePath simulate_income(const HistorySegment& x, const KernelProcess& kernel,
                           const MarketParams& params, double T, std::uint64_t seed,
                           Scheme scheme = Scheme::Milstein);

// y = E (x0 + I) with E = exp((mu_y - |sigma_y|^2 / 2) t + sigma_y' Z^y(t)),
// rebuilt on the noise of `income`. I accumulates E^{-1} times the delay
// term of the reconstruction itself (left-point rule).
IncomePath feedback_representation(const HistorySegment& x, const IncomePath& income,
                                   const KernelProcess& kernel, const MarketParams& params);

struct PicardOptions {
  double tolerance = 1e-12;  // relative sup-norm change
  int max_iterations = 500;
  double alpha = 0.0;  // weight in sup_t e^{-alpha t} |f(t)| for the reported ratios
  Scheme scheme = Scheme::Milstein;
};

struct PicardResult {
  IncomePath path;
  int iterations = 0;
  std::vector<double> ratios;  // successive alpha-norm change ratios
  double contraction_ratio = 0.0;  // geometric mean of the first few ratios
};

// Fixed point of the discretized integral map (trapezoid drift and delay,
// left-point stochastic sum) started from y = x0.
PicardResult picard_solve(const HistorySegment& x, const KernelProcess& kernel,
                          const MarketParams& params, double T, const Increments& noise,
                          const PicardOptions& options = {});

struct PositivityWitness {
  double x0;
  HistorySegment history;  // x1* on the grid, last node replaced by x0
  double epsilon;
  double integral;  // grid integral of x1* against phi
  double mass_m;
};

// Bump datum making income cross zero when phi has a negative part; nullopt
// when phi >= 0.
std::optional<PositivityWitness> positivity_witness(const RadonMeasure& phi, double step,
                                                    double c = 1.0 / 64.0);

struct CrossingEstimate {
  double fraction = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t crossings = 0;
};

// Fraction of paths with y <= 0 at some grid point of (0, horizon].
CrossingEstimate crossing_fraction(const HistorySegment& x, const KernelProcess& kernel,
                                   const MarketParams& params, double horizon,
                                   const NoisePlan& plan, std::size_t n_paths, int threads,
                                   Scheme scheme = Scheme::Milstein);

// CSV with columns t, y, dZ_1..dZ_n, dZstar_1..dZstar_n (increments over
// [t, t+h]; empty on the last row).
void write_income_csv(std::ostream& out, const IncomePath& path);

// Noise plan on step h with the market's correlation factors.
NoisePlan make_noise_plan(const MarketParams& params, double step, std::uint64_t seed,
                          int substeps = 1);

}  // namespace sticky
