#pragma once

#include "sticky/labor_sdde.hpp"
#include "sticky/policy.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace sticky {

struct Verdict {
  std::string check;
  bool pass = false;
  double statistic = 0.0;
  double tolerance = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const Verdict& v);

// History datum rebuilt on any grid step.
using HistoryFactory = std::function<HistorySegment(double step)>;

struct DoleansStudy {
  double max_gap_coarse = 0.0;   // max over paths of the sup relative gap at h
  double max_gap_fine = 0.0;     // same at h / 2
  double mean_gap_coarse = 0.0;
  double mean_gap_fine = 0.0;
  double ratio = 0.0;            // mean_gap_coarse / mean_gap_fine
};

// Optimal policy simulated at h and h/2 on the same fine noise, against the
// closed-form Gamma on that noise.
DoleansStudy doleans_study(double w, const HistoryFactory& history, const RadonMeasure& phi,
                           const MarketParams& params, double T, double h, std::size_t n_paths,
                           std::uint64_t seed, int threads, Scheme scheme = Scheme::Milstein);

struct PerturbationResult {
  std::string name;
  double analytic = 0.0;   // closed-form J of the perturbed policy
  double diff_mean = 0.0;  // paired estimate of J(perturbed) - J(optimal)
  double diff_se = 0.0;
  bool worse = false;      // diff_mean + 2 diff_se < 0
};

struct ValueCheck {
  double value = 0.0;  // value function
  UtilityEstimate optimal;
  double statistic = 0.0;  // |mc + tail - V|
  double tolerance = 0.0;  // n_sigma stderr + |tail|
  bool pass = false;
  std::vector<PerturbationResult> perturbations;
};

std::vector<std::pair<std::string, Policy>> default_perturbations(const PolicyConstants& pc);

// Monte Carlo utility of the optimal feedback policy against the value
// function, and paired comparisons with perturbed policies on common noise.
ValueCheck verify_value(double w, const HistorySegment& x, const RadonMeasure& phi,
                        const MarketParams& params, const ControlledOptions& options,
                        double n_sigma, bool with_perturbations = true);

struct PositivityScan {
  std::size_t n_paths = 0;
  std::size_t nonpositive = 0;  // grid values <= 0 over all paths
  double min_value = 0.0;
};

PositivityScan positivity_scan(const HistorySegment& x, const KernelProcess& kernel,
                               const MarketParams& params, double T, const NoisePlan& plan,
                               std::size_t n_paths, int threads, Scheme scheme = Scheme::Milstein);

struct MonotonicityCheck {
  double min_gap = 0.0;         // min of y_psi - y_phi over paths and grid points t >= 0
  double min_gap_positive = 0.0;  // same over t > 0
  bool monotone = false;
  bool strict = false;
};

MonotonicityCheck monotonicity_check(const HistorySegment& x, const KernelProcess& phi,
                                     const KernelProcess& psi, const MarketParams& params,
                                     double T, const NoisePlan& plan, std::size_t n_paths,
                                     int threads, Scheme scheme = Scheme::Milstein);

struct PicardCheck {
  double max_scaled_gap = 0.0;  // max over paths of sup |euler - picard| / (h scale)
  int max_iterations = 0;
  bool pass = false;
};

PicardCheck picard_check(const HistorySegment& x, const KernelProcess& kernel,
                         const MarketParams& params, double T, const NoisePlan& plan,
                         std::size_t n_paths, double factor, int threads,
                         Scheme scheme = Scheme::Milstein);

}  // namespace sticky
