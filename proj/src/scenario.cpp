#include "sticky/scenario.hpp"

#include "sticky/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace sticky {

using nlohmann::json;

namespace {

Eigen::VectorXd vec(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd mat(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError(std::string(what) + " must be a nested array");
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw ConfigError(std::string(what) + " has ragged rows");
    for (std::size_t k = 0; k < j[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

MarketParams parse_market(const json& j) {
  MarketParams p;
  p.r = j.at("r").get<double>();
  p.delta = j.at("delta").get<double>();
  p.rho = j.at("rho").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.k = j.value("k", 1.0);
  p.mu = vec(j.at("mu"), "market.mu");
  p.sigma = mat(j.at("sigma"), "market.sigma");
  p.mu_y = j.value("mu_y", 0.0);
  p.sigma_y = vec(j.at("sigma_y"), "market.sigma_y");
  const auto n = p.mu.size();
  if (j.contains("correlation")) {
    if (j.contains("C1") || j.contains("C2")) throw ConfigError("give either correlation or C1/C2, not both");
    auto [c1, c2] = diagonal_correlation(vec(j.at("correlation"), "market.correlation"));
    p.C1 = c1;
    p.C2 = c2;
  } else if (j.contains("C1")) {
    p.C1 = mat(j.at("C1"), "market.C1");
    p.C2 = j.contains("C2") ? mat(j.at("C2"), "market.C2") : Eigen::MatrixXd::Zero(n, n);
  } else {
    p.C1 = Eigen::MatrixXd::Identity(n, n);
    p.C2 = Eigen::MatrixXd::Zero(n, n);
  }
  p.validate();
  return p;
}

json market_json(const MarketParams& p) {
  return {{"r", p.r}, {"delta", p.delta}, {"rho", p.rho}, {"gamma", p.gamma}, {"k", p.k},
          {"mu", vec_json(p.mu)}, {"sigma", mat_json(p.sigma)}, {"mu_y", p.mu_y},
          {"sigma_y", vec_json(p.sigma_y)}, {"C1", mat_json(p.C1)}, {"C2", mat_json(p.C2)}};
}

KernelProcess::Modulation modulation(const std::string& name, double T) {
  if (name == "zero") return [](double, double) { return 0.0; };
  if (name == "one") return [](double, double) { return 1.0; };
  if (name == "linear_decay") return [T](double t, double) { return (T - t) / T; };
  if (name == "linear_rise") return [T](double t, double) { return t / T; };
  if (name == "inverse_quadratic") return [](double, double z) { return 1.0 / (1.0 + z * z); };
  if (name == "quadratic_ratio") return [](double, double z) { return z * z / (1.0 + z * z); };
  if (name == "normal_cdf") return [](double, double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  if (name == "logistic") return [](double, double z) { return 1.0 / (1.0 + std::exp(-z)); };
  throw ConfigError("unknown kernel modulation '" + name + "'");
}

KernelProcess parse_process(const json& j, const RadonMeasure& base, double T) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return KernelProcess::constant(base);
  RadonMeasure dir = parse_measure(j.at("direction"), base.horizon());
  auto lam = modulation(j.at("modulation").get<std::string>(), T);
  double tv = j.value("tv_bound", total_variation(base) + total_variation(dir));
  if (kind == "time_varying") {
    return KernelProcess::time_varying(base, dir, [lam](double t) { return lam(t, 0.0); }, tv);
  }
  if (kind == "state_modulated") return KernelProcess::state_modulated(base, dir, lam, tv);
  throw ConfigError("unknown kernel process kind '" + kind + "'");
}

HistorySegment parse_history(const json& j, double d, double h) {
  if (j.contains("values")) {
    Eigen::VectorXd v = vec(j.at("values"), "initial.history.values");
    if (v.size() < 2) throw ConfigError("initial.history.values needs at least two nodes");
    GridFunction native{-d, d / static_cast<double>(v.size() - 1), v};
    int m = window_cells(d, h);
    if (m + 1 == v.size()) return {h, v};
    HistorySegment x{h, Eigen::VectorXd(m + 1)};
    for (int i = 0; i <= m; ++i) x.values[i] = native.at(i == m ? 0.0 : -d + i * h);
    return x;
  }
  const auto shape = j.value("shape", std::string("constant"));
  if (shape == "constant") return HistorySegment::constant(d, h, j.value("value", 1.0));
  if (shape == "linear") return HistorySegment::linear(d, h, j.at("at_minus_d").get<double>(), j.at("at_zero").get<double>());
  if (shape == "tent") {
    return HistorySegment::tent(d, h, j.at("center").get<double>(), j.at("half_width").get<double>(),
                                j.at("height").get<double>(), j.value("base", 0.0));
  }
  throw ConfigError("unknown history shape '" + shape + "'");
}

Numerics parse_numerics(const json& j) {
  Numerics n;
  n.h = j.value("h", n.h);
  n.T = j.value("T", n.T);
  n.T_trunc = j.value("T_trunc", n.T_trunc);
  n.n_paths = j.value("n_paths", n.n_paths);
  n.seed = j.value("seed", n.seed);
  n.threads = j.value("threads", n.threads);
  const auto scheme = j.value("scheme", std::string("milstein"));
  if (scheme == "milstein") n.scheme = Scheme::Milstein;
  else if (scheme == "euler") n.scheme = Scheme::Euler;
  else throw ConfigError("unknown scheme '" + scheme + "'");
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    n.n_sigma = t.value("n_sigma", n.n_sigma);
    n.band_factor = t.value("band_factor", n.band_factor);
    n.doleans_gap = t.value("doleans_gap", n.doleans_gap);
    n.picard_factor = t.value("picard_factor", n.picard_factor);
  }
  if (!(n.h > 0.0) || !(n.T > 0.0) || n.n_paths == 0 || n.threads < 1) {
    throw ConfigError("numerics: h, T, n_paths and threads must be positive");
  }
  return n;
}

json numerics_json(const Numerics& n) {
  return {{"h", n.h}, {"T", n.T}, {"T_trunc", n.T_trunc}, {"n_paths", n.n_paths}, {"seed", n.seed},
          {"scheme", to_string(n.scheme)},
          {"tolerances", {{"n_sigma", n.n_sigma}, {"band_factor", n.band_factor},
                          {"doleans_gap", n.doleans_gap}, {"picard_factor", n.picard_factor}}}};
}

}  // namespace

RadonMeasure parse_measure(const json& j, double horizon) {
  const double d = j.value("d", horizon);
  std::vector<Atom> atoms;
  for (const auto& a : j.value("atoms", json::array())) {
    if (!a.is_array() || a.size() != 2) throw ConfigError("atoms must be [location, weight] pairs");
    atoms.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  std::vector<DensityPiece> density;
  for (const auto& p : j.value("density", json::array())) {
    if (!p.is_array() || p.size() != 2) throw ConfigError("density pieces must be [start, value] pairs");
    density.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  try {
    return RadonMeasure(d, std::move(atoms), std::move(density));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid measure: ") + e.what());
  }
}

json measure_to_json(const RadonMeasure& m) {
  json atoms = json::array(), density = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({a.location, a.weight});
  for (const auto& p : m.density()) density.push_back({p.start, p.value});
  return {{"d", m.horizon()}, {"atoms", atoms}, {"density", density}};
}

Scenario parse_scenario(const json& j) {
  try {
    Scenario s;
    s.market = parse_market(j.at("market"));
    s.numerics = parse_numerics(j.value("numerics", json::object()));
    const auto& kj = j.at("kernel");
    const double d = kj.at("d").get<double>();
    s.phi = parse_measure(kj, d);
    s.process = kj.contains("process") ? parse_process(kj.at("process"), s.phi, s.numerics.T)
                                       : KernelProcess::constant(s.phi);
    const auto& ij = j.at("initial");
    s.w = ij.value("w", 0.0);
    s.history_spec = ij.value("history", json::object());
    s.x = parse_history(s.history_spec, d, s.numerics.h);
    if (j.contains("uncertainty")) {
      const auto& u = j.at("uncertainty");
      if (u.contains("tube")) {
        s.uncertainty = UncertaintySet::tube(parse_measure(u.at("tube").at("center"), d),
                                             parse_measure(u.at("tube").at("radius"), d));
      } else if (u.contains("family")) {
        std::vector<RadonMeasure> fam;
        for (const auto& m : u.at("family")) fam.push_back(parse_measure(m, d));
        s.uncertainty = UncertaintySet::family(std::move(fam));
      } else {
        throw ConfigError("uncertainty block needs 'tube' or 'family'");
      }
    }
    s.resolved = j;
    s.resolved["market"] = market_json(s.market);
    s.resolved["numerics"] = numerics_json(s.numerics);
    s.resolved["initial"]["w"] = s.w;
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

HistorySegment Scenario::history_on(double step) const {
  return parse_history(history_spec, phi.horizon(), step);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  Scenario s = parse_scenario(j);
  s.resolved["source"] = path;
  return s;
}

void apply_overrides(Scenario& s, const json& patch) {
  json j = s.resolved;
  j.erase("source");
  for (auto it = patch.begin(); it != patch.end(); ++it) j["numerics"][it.key()] = it.value();
  const int threads = patch.value("threads", s.numerics.threads);
  auto source = s.resolved.value("source", std::string());
  s = parse_scenario(j);
  s.numerics.threads = threads;
  if (!source.empty()) s.resolved["source"] = source;
}

}  // namespace sticky
