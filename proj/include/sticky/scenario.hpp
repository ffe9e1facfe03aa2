#pragma once

#include "sticky/history.hpp"
#include "sticky/kernel.hpp"
#include "sticky/labor_sdde.hpp"
#include "sticky/params.hpp"
#include "sticky/robust.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace sticky {

struct Numerics {
  double h = 0.01;
  double T = 1.0;
  double T_trunc = 0.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  Scheme scheme = Scheme::Milstein;
  double n_sigma = 3.0;
  double band_factor = 10.0;
  double doleans_gap = 5e-3;
  double picard_factor = 5.0;
};

struct Scenario {
  MarketParams market;
  RadonMeasure phi;
  KernelProcess process;
  double w = 0.0;
  HistorySegment x;
  Numerics numerics;
  std::optional<UncertaintySet> uncertainty;
  nlohmann::json history_spec;
  nlohmann::json resolved;  // input with defaults filled in (threads omitted)

  // The initial history rebuilt on another grid step (explicit values are
  // linearly resampled).
  HistorySegment history_on(double step) const;
};

// Reads a measure block {atoms: [[s, w], ...], density: [[s, value], ...]}.
RadonMeasure parse_measure(const nlohmann::json& j, double horizon);
nlohmann::json measure_to_json(const RadonMeasure& m);

// Throws ConfigError on malformed input (missing fields, bad shapes,
// invalid correlation factors, grids that do not fit).
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

// Applies numerics overrides (command-line flags) and re-resolves the
// scenario.
void apply_overrides(Scenario& s, const nlohmann::json& numerics_patch);

}  // namespace sticky
