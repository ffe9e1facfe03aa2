#include "sticky/commands.hpp"

#include "sticky/errors.hpp"
#include "sticky/report.hpp"
#include "sticky/robust.hpp"
#include "sticky/scenario.hpp"
#include "sticky/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

namespace sticky {

using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::size_t> paths;
  std::optional<double> T;
  std::optional<double> h;
  std::optional<double> T_trunc;
  std::optional<std::string> scheme;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "override numerics.seed");
    cmd->add_option("--threads", threads, "worker threads (results do not depend on it)");
    cmd->add_option("--paths", paths, "override numerics.n_paths");
    cmd->add_option("--T", T, "override numerics.T");
    cmd->add_option("--step", h, "override numerics.h (grid step)");
    cmd->add_option("--T-trunc", T_trunc, "override numerics.T_trunc");
    cmd->add_option("--scheme", scheme, "euler or milstein")->check(CLI::IsMember({"euler", "milstein"}));
  }

  Scenario load(const std::string& path) const {
    Scenario s = load_scenario(path);
    json patch = json::object();
    if (seed) patch["seed"] = *seed;
    if (threads) patch["threads"] = *threads;
    if (paths) patch["n_paths"] = *paths;
    if (T) patch["T"] = *T;
    if (h) patch["h"] = *h;
    if (T_trunc) patch["T_trunc"] = *T_trunc;
    if (scheme) patch["scheme"] = *scheme;
    if (!patch.empty()) apply_overrides(s, patch);
    return s;
  }
};

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  return f;
}

void emit_json(std::ostream& out, const std::optional<std::string>& file, const json& j) {
  if (file) {
    auto f = open_out(*file);
    f << j.dump(2) << '\n';
  } else {
    out << j.dump(2) << '\n';
  }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

int cmd_params_check(const Scenario& s, std::ostream& out) {
  const auto& p = s.market;
  json j;
  j["kappa"] = vector_json(market_price_of_risk(p));
  j["beta"] = beta(p);
  j["beta_inf"] = beta_infinity(s.phi, p.r, p.delta);
  const double gap = human_capital_gap(s.phi, p);
  const double den = merton_denominator(p);
  if (gap > 0.0) {
    auto hc = human_capital_kernel(s.phi, p, s.numerics.h);
    j["g_inf"] = hc.g;
    j["min_h_inf"] = hc.h.values.minCoeff();
  }
  if (den > 0.0) {
    const double nu = p.gamma / den;
    const double b = 1.0 - 1.0 / p.gamma;
    j["nu"] = nu;
    j["f_inf"] = (1.0 + p.delta * std::pow(p.k, -b)) * nu;
    j["b"] = b;
  }
  bool ok = true;
  json checks = json::array();
  for (const auto& c : check_assumptions(s.phi, p, s.numerics.h, false)) {
    checks.push_back({{"assumption", c.name}, {"kernel", "phi"}, {"pass", c.pass}, {"statistic", c.statistic}, {"details", c.details}});
    ok = ok && c.pass;
  }
  if (s.uncertainty) {
    RadonMeasure nu = s.uncertainty->minimum();
    j["order_minimum"] = measure_to_json(nu);
    for (const auto& c : check_assumptions(nu, p, s.numerics.h, true)) {
      checks.push_back({{"assumption", c.name}, {"kernel", "order minimum"}, {"pass", c.pass}, {"statistic", c.statistic}, {"details", c.details}});
      ok = ok && c.pass;
    }
  }
  j["checks"] = checks;
  j["pass"] = ok;
  out << with_provenance(j, s.resolved).dump(2) << '\n';
  return ok ? kExitOk : kExitAssumption;
}

int cmd_simulate(const Scenario& s, const std::string& out_dir, bool svg, std::ostream& out) {
  const auto& nm = s.numerics;
  PolicyConstants pc = policy_constants(s.phi, s.market, nm.h);
  ControlledOptions opt;
  opt.T = nm.T;
  opt.step = nm.h;
  opt.n_paths = nm.n_paths;
  opt.seed = nm.seed;
  opt.threads = nm.threads;
  opt.scheme = nm.scheme;
  opt.record = true;
  opt.closed_form = true;
  opt.band_factor = nm.band_factor;
  auto run = simulate_controlled(s.w, s.x, s.process, pc, s.market, opt);
  const double G0 = total_wealth(s.w, s.x, pc);
  auto J = estimate_J(run, opt.policy, pc, s.market, G0, nm.T);

  std::filesystem::path dir(out_dir);
  {
    auto f = open_out(dir / "paths.csv");
    write_csv_preamble(f, s.resolved);
    f << "path,t,W,y,Gamma,c,B";
    for (int i = 0; i < s.market.n(); ++i) f << ",theta_" << i + 1;
    f << '\n' << std::setprecision(17);
    for (std::size_t p = 0; p < run.paths.size(); ++p) {
      const auto& r = *run.paths[p].record;
      for (Eigen::Index k = 0; k < r.W.size(); ++k) {
        f << p << ',' << k * nm.h << ',' << r.W[k] << ',' << r.y[k] << ',' << r.Gamma[k] << ',' << r.c[k]
          << ',' << r.B[k];
        for (Eigen::Index i = 0; i < r.theta.rows(); ++i) f << ',' << r.theta(i, k);
        f << '\n';
      }
    }
  }
  double max_gap = 0.0;
  for (const auto& p : run.paths) max_gap = std::max(max_gap, p.max_closed_gap);
  json summary = {
      {"mc_value", J.mc.mean}, {"stderr", J.mc.std_error}, {"tail", finite_or_null(J.tail)},
      {"closed_form_value", finite_or_null(value_function(s.w, s.x, pc))},
      {"total_wealth", G0}, {"max_doleans_gap", max_gap}, {"max_deficit", run.max_deficit},
      {"band", run.band}, {"n_paths", nm.n_paths}, {"seed", nm.seed},
      {"doleans_exact", s.market.perfectly_correlated() && s.process.kind() == KernelProcess::Kind::Constant}};
  {
    auto f = open_out(dir / "summary.json");
    f << with_provenance(summary, s.resolved).dump(2) << '\n';
  }
  if (svg) {
    const auto N = run.paths.front().record->W.size();
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(N, 0.0, nm.h * static_cast<double>(N - 1));
    std::vector<Eigen::VectorXd> g, c;
    for (const auto& p : run.paths) {
      g.push_back(p.record->Gamma);
      c.push_back(p.record->c);
    }
    auto fg = open_out(dir / "gamma_fan.svg");
    write_fan_chart_svg(fg, "total wealth Gamma", t, g);
    auto fc = open_out(dir / "consumption_fan.svg");
    write_fan_chart_svg(fc, "consumption c", t, c);
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

std::vector<Verdict> run_verify(const Scenario& s, const std::string& which) {
  const auto& nm = s.numerics;
  const auto& p = s.market;
  std::vector<Verdict> out;
  NoisePlan plan = make_noise_plan(p, nm.h, nm.seed);
  if (which == "markov") {
    MarkovOptions mo;
    mo.step = nm.h;
    mo.T_trunc = nm.T_trunc;
    mo.n_paths = nm.n_paths;
    mo.seed = nm.seed;
    mo.threads = nm.threads;
    mo.scheme = nm.scheme;
    mo.n_sigma = nm.n_sigma;
    auto r = verify_markov_rep(s.x, s.phi, p, mo);
    Verdict v{"markov-representation", r.pass, r.statistic, r.tolerance, {}};
    v.details = {{"mc", r.mc.mean}, {"stderr", r.mc.std_error}, {"closed_form", r.closed_form},
                 {"tail_bound", r.mc.tail_bound}, {"T_trunc", r.T_trunc}, {"n_paths", r.mc.n_paths}};
    out.push_back(v);
  } else if (which == "gamma") {
    auto hist = [&s](double step) { return s.history_on(step); };
    auto d = doleans_study(s.w, hist, s.phi, p, nm.T, nm.h, nm.n_paths, nm.seed, nm.threads, nm.scheme);
    json det = {{"max_gap_h", d.max_gap_coarse}, {"max_gap_h_half", d.max_gap_fine},
                {"mean_gap_h", d.mean_gap_coarse}, {"mean_gap_h_half", d.mean_gap_fine},
                {"closed_form_exact", p.perfectly_correlated()}};
    out.push_back({"doleans-gap", d.max_gap_coarse <= nm.doleans_gap, d.max_gap_coarse, nm.doleans_gap, det});
    out.push_back({"doleans-ratio", d.ratio >= 1.6 && d.ratio <= 2.4, d.ratio, 0.4, det});
  } else if (which == "value") {
    ControlledOptions opt;
    opt.T = nm.T;
    opt.step = nm.h;
    opt.n_paths = nm.n_paths;
    opt.seed = nm.seed;
    opt.threads = nm.threads;
    opt.scheme = nm.scheme;
    auto r = verify_value(s.w, s.x, s.phi, p, opt, nm.n_sigma);
    out.push_back({"value-function", r.pass, r.statistic, r.tolerance,
                   {{"value", r.value}, {"mc", r.optimal.mc.mean}, {"stderr", r.optimal.mc.std_error}, {"tail", r.optimal.tail}}});
    for (const auto& pr : r.perturbations) {
      out.push_back({"perturbation: " + pr.name, pr.worse, pr.diff_mean, 2.0 * pr.diff_se,
                     {{"analytic_J", finite_or_null(pr.analytic)}, {"diff_se", pr.diff_se}}});
    }
  } else if (which == "positivity") {
    if (is_nonnegative(s.phi)) {
      auto r = positivity_scan(s.x, s.process, p, nm.T, plan, nm.n_paths, nm.threads, nm.scheme);
      bool strictly_positive = (s.x.values.array() > 0.0).all();
      out.push_back({"positivity", r.nonpositive == 0, static_cast<double>(r.nonpositive), 0.0,
                     {{"min_value", r.min_value}, {"n_paths", r.n_paths}, {"datum_strictly_positive", strictly_positive}}});
    } else {
      auto w = positivity_witness(s.phi, nm.h);
      KernelProcess k = KernelProcess::constant(s.phi);
      auto c = crossing_fraction(w->history, k, p, std::min(1.0, nm.T), plan, nm.n_paths, nm.threads, nm.scheme);
      out.push_back({"positivity-witness", c.fraction > 0.0, c.fraction, 0.0,
                     {{"x0", w->x0}, {"epsilon", w->epsilon}, {"integral", w->integral}, {"mass_m", w->mass_m},
                      {"stderr", c.std_error}, {"n_paths", c.n_paths}}});
    }
  } else if (which == "monotonicity") {
    RadonMeasure psi = s.phi + RadonMeasure::flat(s.phi.horizon(), 0.05);
    auto m = monotonicity_check(s.x, KernelProcess::constant(s.phi), KernelProcess::constant(psi), p, nm.T, plan,
                                nm.n_paths, nm.threads, nm.scheme);
    out.push_back({"monotonicity", m.monotone && m.strict, m.min_gap_positive, 0.0,
                   {{"min_gap", m.min_gap}, {"psi", measure_to_json(psi)}}});
  } else if (which == "picard") {
    std::size_t n = std::min<std::size_t>(nm.n_paths, 20);
    auto c = picard_check(s.x, s.process, p, nm.T, plan, n, nm.picard_factor, nm.threads, nm.scheme);
    out.push_back({"picard-agreement", c.pass, c.max_scaled_gap, nm.picard_factor,
                   {{"max_iterations", c.max_iterations}, {"n_paths", n}}});
  }
  return out;
}

json report_json(const GameReport& r) {
  json stress = json::array();
  for (const auto& s : r.stress) {
    stress.push_back({{"adversary", s.adversary}, {"pass", s.pass}, {"min_gamma", s.min_gamma},
                      {"max_shortfall", s.max_shortfall}, {"min_income_gap", s.min_income_gap},
                      {"income_monotone", s.income_monotone}, {"wealth_monotone", s.wealth_monotone},
                      {"admissible", s.admissible}, {"utility_equal", s.utility_equal},
                      {"J_adversary", s.J_adversary}, {"J_nu", s.J_nu}});
  }
  json checks = json::array();
  for (const auto& a : r.assumptions) checks.push_back({{"assumption", a.name}, {"pass", a.pass}, {"statistic", a.statistic}});
  return {{"robust_value", finite_or_null(r.robust_value)}, {"value_at_nu", finite_or_null(r.value_at_nu)},
          {"reduction_exact", r.reduction_exact}, {"order_minimum", measure_to_json(r.nu)},
          {"g_inf", r.constants.g}, {"min_h_inf", r.constants.min_h()}, {"total_wealth", r.total_wealth},
          {"saddle_controls", {{"c", r.initial_controls.c}, {"B", r.initial_controls.B},
                               {"theta", vector_json(r.initial_controls.theta)}}},
          {"assumptions", checks}, {"band", r.band}, {"stress", stress}, {"stress_pass", r.stress_pass}};
}

int cmd_sweep(const Scenario& s, const std::string& param, double from, double to, int points,
              const std::optional<std::string>& file, std::ostream& out) {
  if (points < 2) throw ConfigError("sweep needs at least two points");
  std::ofstream fo;
  std::ostream* o = &out;
  if (file) {
    fo = open_out(*file);
    o = &fo;
  }
  write_csv_preamble(*o, s.resolved);
  *o << std::setprecision(17);
  auto grid = [&](int i) { return from + (to - from) * i / (points - 1); };
  if (param == "rho1") {
    if (s.market.n() != 1) throw ConfigError("rho1 sweep needs a one-asset market");
    *o << "rho1,theta_1,hedge_1\n";
    for (int i = 0; i < points; ++i) {
      MarketParams p = s.market;
      auto [c1, c2] = diagonal_correlation(Eigen::VectorXd::Constant(1, grid(i)));
      p.C1 = c1;
      p.C2 = c2;
      auto pc = policy_constants(s.phi, p, s.numerics.h);
      double G = total_wealth(s.w, s.x, pc);
      auto u = feedback_controls(std::max(G, 0.0), s.x.x0(), pc);
      *o << grid(i) << ',' << u.theta[0] << ',' << -pc.g * s.x.x0() * pc.hedge[0] << '\n';
    }
  } else if (param == "psi_scale") {
    if (!s.uncertainty || s.uncertainty->kind() != UncertaintySet::Kind::Tube) {
      throw ConfigError("psi_scale sweep needs a tube uncertainty block");
    }
    *o << "psi_scale,robust_value,g_nu,total_wealth,status\n";
    for (int i = 0; i < points; ++i) {
      auto K = UncertaintySet::tube(s.uncertainty->center(), grid(i) * s.uncertainty->radius());
      try {
        auto r = solve_robust(s.w, s.x, K, s.market);
        *o << grid(i) << ',' << r.robust_value << ',' << r.constants.g << ',' << r.total_wealth << ",ok\n";
      } catch (const AssumptionViolation& e) {
        *o << grid(i) << ",nan,nan,nan,\"" << e.assumption() << "\"\n";
      }
    }
  } else if (param == "gamma") {
    *o << "gamma,f_inf,nu,value,status\n";
    for (int i = 0; i < points; ++i) {
      MarketParams p = s.market;
      p.gamma = grid(i);
      if (p.gamma == 1.0) {
        *o << p.gamma << ",nan,nan,nan,excluded\n";
        continue;
      }
      try {
        auto pc = policy_constants(s.phi, p, s.numerics.h);
        *o << p.gamma << ',' << pc.f << ',' << pc.nu << ',' << value_function(s.w, s.x, pc) << ",ok\n";
      } catch (const AssumptionViolation& e) {
        *o << p.gamma << ",nan,nan,nan,\"" << e.assumption() << "\"\n";
      }
    }
  } else {
    throw ConfigError("unknown sweep parameter '" + param + "'");
  }
  return kExitOk;
}

int cmd_income(const Scenario& s, const std::string& method, std::uint64_t path,
               const std::optional<std::string>& file, std::ostream& out) {
  const auto& nm = s.numerics;
  NoisePlan plan = make_noise_plan(s.market, nm.h, nm.seed);
  const auto N = static_cast<std::size_t>(std::llround(nm.T / nm.h));
  auto noise = generate_noise(plan, path, N);
  IncomePath y;
  if (method == "euler") {
    y = simulate_income(s.x, s.process, s.market, nm.T, noise, Scheme::Euler);
  } else if (method == "milstein") {
    y = simulate_income(s.x, s.process, s.market, nm.T, noise, Scheme::Milstein);
  } else if (method == "picard") {
    PicardOptions po;
    po.scheme = nm.scheme;
    y = picard_solve(s.x, s.process, s.market, nm.T, noise, po).path;
  } else {
    auto base = simulate_income(s.x, s.process, s.market, nm.T, noise, nm.scheme);
    y = feedback_representation(s.x, base, s.process, s.market);
  }
  std::ofstream fo;
  std::ostream* o = &out;
  if (file) {
    fo = open_out(*file);
    o = &fo;
  }
  write_csv_preamble(*o, s.resolved);
  write_income_csv(*o, y);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Life-cycle consumption and investment with delayed labor income", "sticky"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  std::string scenario;
  Overrides ov;
  auto add_scenario = [&](CLI::App* c) {
    c->add_option("scenario", scenario, "scenario JSON file")->required();
    ov.attach(c);
  };

  auto* pc = app.add_subcommand("params-check", "print derived constants and check the well-posedness conditions");
  add_scenario(pc);

  auto* sim = app.add_subcommand("simulate", "simulate wealth and income under the optimal feedback policy");
  add_scenario(sim);
  std::string out_dir = ".";
  bool svg = false;
  sim->add_option("--out", out_dir, "output directory");
  sim->add_flag("--svg", svg, "also write fan charts of Gamma and consumption");

  auto* ver = app.add_subcommand("verify", "run one verification suite and print JSON verdicts");
  add_scenario(ver);
  std::string which;
  std::optional<std::string> json_out;
  ver->add_option("--which", which, "markov, gamma, value, positivity, monotonicity or picard")
      ->required()
      ->check(CLI::IsMember({"markov", "gamma", "value", "positivity", "monotonicity", "picard"}));
  ver->add_option("--out", json_out, "write the verdicts to a file instead of stdout");

  auto* rob = app.add_subcommand("robust", "solve the robust problem and stress-test the saddle point");
  add_scenario(rob);
  int n_det = 5, n_mod = 5;
  rob->add_option("--deterministic", n_det, "deterministic adversaries");
  rob->add_option("--modulated", n_mod, "state-modulated adversaries");
  std::optional<std::string> rob_out;
  rob->add_option("--out", rob_out, "write the report to a file instead of stdout");

  auto* sw = app.add_subcommand("sweep", "sweep one parameter and write CSV");
  add_scenario(sw);
  std::string param;
  double from = 0.0, to = 1.0;
  int points = 11;
  std::optional<std::string> sweep_out;
  sw->add_option("--param", param, "rho1, psi_scale or gamma")->required()->check(CLI::IsMember({"rho1", "psi_scale", "gamma"}));
  sw->add_option("--from", from)->required();
  sw->add_option("--to", to)->required();
  sw->add_option("--points", points);
  sw->add_option("--out", sweep_out);

  auto* inc = app.add_subcommand("income", "simulate one income path and write CSV with its noise");
  add_scenario(inc);
  std::string method = "milstein";
  std::uint64_t path_index = 0;
  std::optional<std::string> inc_out;
  inc->add_option("--method", method)->check(CLI::IsMember({"euler", "milstein", "picard", "feedback"}));
  inc->add_option("--path", path_index, "path index within the seed");
  inc->add_option("--out", inc_out);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    Scenario s = ov.load(scenario);
    if (pc->parsed()) return cmd_params_check(s, out);
    if (sim->parsed()) return cmd_simulate(s, out_dir, svg, out);
    if (ver->parsed()) {
      auto verdicts = run_verify(s, which);
      json arr = json::array();
      bool ok = true;
      for (const auto& v : verdicts) {
        arr.push_back(to_json(v));
        ok = ok && v.pass;
      }
      emit_json(out, json_out, with_provenance({{"which", which}, {"pass", ok}, {"verdicts", arr}}, s.resolved));
      return ok ? kExitOk : kExitVerification;
    }
    if (rob->parsed()) {
      if (!s.uncertainty) throw ConfigError("robust needs an uncertainty block");
      StressOptions so;
      so.T = s.numerics.T;
      so.n_paths = s.numerics.n_paths;
      so.seed = s.numerics.seed;
      so.threads = s.numerics.threads;
      so.deterministic = n_det;
      so.modulated = n_mod;
      so.scheme = s.numerics.scheme;
      auto rep = stress_saddle(s.w, s.x, *s.uncertainty, s.market, so);
      emit_json(out, rob_out, with_provenance(report_json(rep), s.resolved));
      return rep.stress_pass && rep.reduction_exact ? kExitOk : kExitVerification;
    }
    if (sw->parsed()) return cmd_sweep(s, param, from, to, points, sweep_out, out);
    if (inc->parsed()) return cmd_income(s, method, path_index, inc_out, out);
  } catch (const AssumptionViolation& e) {
    err << "assumption violated: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const AdmissibilityViolation& e) {
    err << "admissibility violated: " << e.what() << '\n';
    return kExitAssumption;
  } catch (const ConfigError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "verification failure: " << e.what() << '\n';
    return kExitVerification;
  }
  return kExitInput;
}

}  // namespace sticky
