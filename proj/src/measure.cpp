#include "sticky/measure.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sticky {

namespace {

constexpr double kSnap = 1e-9;

bool same_horizon(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

void require_same_horizon(const RadonMeasure& a, const RadonMeasure& b) {
  if (!same_horizon(a.horizon(), b.horizon())) {
    std::ostringstream os;
    os << "measures live on different windows: d = " << a.horizon() << " vs " << b.horizon();
    throw DomainError(os.str());
  }
}

// Merged breakpoints of two partitions of [-d, 0].
std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double value_on(const std::vector<double>& breaks, const std::vector<double>& values,
                double left) {
  // Value of the piece containing [left, next).
  auto it = std::upper_bound(breaks.begin(), breaks.end(), left);
  auto idx = static_cast<std::size_t>(std::distance(breaks.begin(), it)) - 1;
  if (idx >= values.size()) idx = values.size() - 1;
  return values[idx];
}

}  // namespace

struct MeasureAccess {
  static RadonMeasure make(double horizon, std::vector<Atom> atoms, std::vector<double> breaks,
                           std::vector<double> values) {
    return RadonMeasure(RadonMeasure::Canonical{}, horizon, std::move(atoms), std::move(breaks),
                        std::move(values));
  }

  template <class Op>
  static RadonMeasure combine(const RadonMeasure& a, const RadonMeasure& b, Op op) {
    require_same_horizon(a, b);
    std::vector<Atom> atoms;
    std::size_t i = 0, j = 0;
    while (i < a.atoms_.size() || j < b.atoms_.size()) {
      if (j == b.atoms_.size() ||
          (i < a.atoms_.size() && a.atoms_[i].location < b.atoms_[j].location)) {
        atoms.push_back({a.atoms_[i].location, op(a.atoms_[i].weight, 0.0)});
        ++i;
      } else if (i == a.atoms_.size() || b.atoms_[j].location < a.atoms_[i].location) {
        atoms.push_back({b.atoms_[j].location, op(0.0, b.atoms_[j].weight)});
        ++j;
      } else {
        atoms.push_back({a.atoms_[i].location, op(a.atoms_[i].weight, b.atoms_[j].weight)});
        ++i;
        ++j;
      }
    }
    auto breaks = merge_breaks(a.breaks_, b.breaks_);
    std::vector<double> values;
    values.reserve(breaks.size() - 1);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      values.push_back(op(value_on(a.breaks_, a.values_, breaks[k]),
                          value_on(b.breaks_, b.values_, breaks[k])));
    }
    return make(a.horizon_, std::move(atoms), std::move(breaks), std::move(values));
  }

  template <class F>
  static RadonMeasure map(const RadonMeasure& a, F f) {
    std::vector<Atom> atoms = a.atoms_;
    for (auto& at : atoms) at.weight = f(at.weight);
    std::vector<double> values = a.values_;
    for (auto& v : values) v = f(v);
    return make(a.horizon_, std::move(atoms), a.breaks_, std::move(values));
  }
};

RadonMeasure::RadonMeasure(double horizon) : horizon_(horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw DomainError("measure window d must be positive and finite");
  }
  breaks_ = {-horizon, 0.0};
  values_ = {0.0};
}

RadonMeasure::RadonMeasure(double horizon, std::vector<Atom> atoms,
                           std::vector<DensityPiece> density)
    : RadonMeasure(horizon) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    auto& at = atoms[i];
    if (!std::isfinite(at.location) || !std::isfinite(at.weight)) {
      throw DomainError("atom with non-finite location or weight");
    }
    if (std::abs(at.location + horizon) <= kSnap * horizon) at.location = -horizon;
    if (at.location < -horizon || at.location >= 0.0) {
      std::ostringstream os;
      os << "atom at s = " << at.location << " outside [-d, 0) with d = " << horizon
         << " (measures must be null at 0)";
      throw DomainError(os.str());
    }
    if (i > 0 && !(atoms[i - 1].location < at.location)) {
      throw DomainError("atom locations must be strictly increasing");
    }
  }
  atoms_ = std::move(atoms);

  if (!density.empty()) {
    if (std::abs(density.front().start + horizon) > kSnap * horizon) {
      throw DomainError("density breakpoints must start at -d");
    }
    breaks_.clear();
    values_.clear();
    for (std::size_t i = 0; i < density.size(); ++i) {
      double s = i == 0 ? -horizon : density[i].start;
      if (!std::isfinite(s) || !std::isfinite(density[i].value)) {
        throw DomainError("density piece with non-finite start or value");
      }
      if (i > 0 && !(breaks_.back() < s)) {
        throw DomainError("density breakpoints must be strictly increasing");
      }
      if (s >= 0.0) throw DomainError("density breakpoint at or beyond 0");
      breaks_.push_back(s);
      values_.push_back(density[i].value);
    }
    breaks_.push_back(0.0);
  }
  canonicalize();
}

RadonMeasure::RadonMeasure(Canonical, double horizon, std::vector<Atom> atoms,
                           std::vector<double> breaks, std::vector<double> values)
    : horizon_(horizon),
      atoms_(std::move(atoms)),
      breaks_(std::move(breaks)),
      values_(std::move(values)) {
  canonicalize();
}

void RadonMeasure::canonicalize() {
  std::erase_if(atoms_, [](const Atom& a) { return a.weight == 0.0; });
  std::vector<double> b{breaks_.front()};
  std::vector<double> v;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(breaks_[i + 1] > breaks_[i])) continue;
    if (!v.empty() && v.back() == values_[i]) {
      b.back() = breaks_[i + 1];
    } else {
      v.push_back(values_[i]);
      b.push_back(breaks_[i + 1]);
    }
  }
  if (v.empty()) {
    b = {-horizon_, 0.0};
    v = {0.0};
  }
  breaks_ = std::move(b);
  values_ = std::move(v);
}

RadonMeasure RadonMeasure::dirac(double horizon, double location, double weight) {
  return RadonMeasure(horizon, {{location, weight}}, {});
}

RadonMeasure RadonMeasure::flat(double horizon, double value, double from, double to) {
  if (!(from < to)) throw DomainError("flat density needs from < to");
  std::vector<DensityPiece> pieces;
  if (from > -horizon) pieces.push_back({-horizon, 0.0});
  pieces.push_back({from, value});
  if (to < 0.0) pieces.push_back({to, 0.0});
  if (to > 0.0) throw DomainError("flat density extends beyond 0");
  return RadonMeasure(horizon, {}, std::move(pieces));
}

std::vector<DensityPiece> RadonMeasure::density() const {
  std::vector<DensityPiece> out;
  for (std::size_t i = 0; i < values_.size(); ++i) out.push_back({breaks_[i], values_[i]});
  return out;
}

bool RadonMeasure::is_zero() const {
  return atoms_.empty() && values_.size() == 1 && values_[0] == 0.0;
}

double RadonMeasure::atom_weight_at(double s) const {
  for (const auto& a : atoms_)
    if (a.location == s) return a.weight;
  return 0.0;
}

double RadonMeasure::density_at(double s) const {
  if (s < -horizon_ || s >= 0.0) return 0.0;
  return value_on(breaks_, values_, s);
}

RadonMeasure operator+(const RadonMeasure& a, const RadonMeasure& b) {
  return MeasureAccess::combine(a, b, [](double x, double y) { return x + y; });
}

RadonMeasure operator-(const RadonMeasure& a, const RadonMeasure& b) {
  return MeasureAccess::combine(a, b, [](double x, double y) { return x - y; });
}

RadonMeasure operator-(const RadonMeasure& a) {
  return MeasureAccess::map(a, [](double x) { return -x; });
}

RadonMeasure operator*(double k, const RadonMeasure& a) {
  return MeasureAccess::map(a, [k](double x) { return k * x; });
}

bool same_window(const RadonMeasure& a, const RadonMeasure& b) {
  return same_horizon(a.horizon(), b.horizon());
}

const char* to_string(OrderRelation r) {
  switch (r) {
    case OrderRelation::LessOrEqual: return "LessOrEqual";
    case OrderRelation::GreaterOrEqual: return "GreaterOrEqual";
    case OrderRelation::Equal: return "Equal";
    case OrderRelation::Incomparable: return "Incomparable";
  }
  return "?";
}

HahnJordan hahn_jordan(const RadonMeasure& measure) {
  auto pos = MeasureAccess::map(measure, [](double x) { return x > 0.0 ? x : 0.0; });
  auto neg = MeasureAccess::map(measure, [](double x) { return x < 0.0 ? -x : 0.0; });
  double m = total_mass(neg);
  return {std::move(pos), std::move(neg), m};
}

double total_mass(const RadonMeasure& measure) {
  double acc = 0.0;
  for (const auto& a : measure.atoms()) acc += a.weight;
  const auto& b = measure.breaks();
  const auto& v = measure.values();
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * (b[i + 1] - b[i]);
  return acc;
}

double total_variation(const RadonMeasure& measure) {
  double acc = 0.0;
  for (const auto& a : measure.atoms()) acc += std::abs(a.weight);
  const auto& b = measure.breaks();
  const auto& v = measure.values();
  for (std::size_t i = 0; i < v.size(); ++i) acc += std::abs(v[i]) * (b[i + 1] - b[i]);
  return acc;
}

bool is_nonnegative(const RadonMeasure& measure, double tol) {
  for (const auto& a : measure.atoms())
    if (a.weight < -tol) return false;
  for (double v : measure.values())
    if (v < -tol) return false;
  return true;
}

OrderRelation compare(const RadonMeasure& a, const RadonMeasure& b, double tol) {
  require_same_horizon(a, b);
  auto diff = b - a;
  bool has_pos = false, has_neg = false;
  auto visit = [&](double x) {
    if (x > tol) has_pos = true;
    if (x < -tol) has_neg = true;
  };
  for (const auto& at : diff.atoms()) visit(at.weight);
  for (double v : diff.values()) visit(v);
  if (has_pos && has_neg) return OrderRelation::Incomparable;
  if (has_pos) return OrderRelation::LessOrEqual;
  if (has_neg) return OrderRelation::GreaterOrEqual;
  return OrderRelation::Equal;
}

RadonMeasure lattice_min(const RadonMeasure& a, const RadonMeasure& b) {
  return MeasureAccess::combine(a, b, [](double x, double y) { return std::min(x, y); });
}

RadonMeasure lattice_max(const RadonMeasure& a, const RadonMeasure& b) {
  return MeasureAccess::combine(a, b, [](double x, double y) { return std::max(x, y); });
}

namespace {

template <class Pred>
std::vector<std::pair<double, double>> support_where(const RadonMeasure& m, Pred keep) {
  std::vector<std::pair<double, double>> out;
  for (const auto& a : m.atoms())
    if (keep(a.weight)) out.emplace_back(a.location, a.location);
  const auto& b = m.breaks();
  const auto& v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep(v[i])) out.emplace_back(b[i], b[i + 1]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::pair<double, double>> negative_support(const RadonMeasure& measure) {
  return support_where(measure, [](double x) { return x < 0.0; });
}

std::vector<std::pair<double, double>> support(const RadonMeasure& measure) {
  return support_where(measure, [](double x) { return x != 0.0; });
}

double exp_moment_upto(const RadonMeasure& measure, double rate, double upper) {
  double acc = 0.0;
  for (const auto& a : measure.atoms())
    if (a.location <= upper) acc += a.weight * std::exp(rate * a.location);
  const auto& b = measure.breaks();
  const auto& v = measure.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double lo = b[i];
    double hi = std::min(b[i + 1], upper);
    if (!(hi > lo) || v[i] == 0.0) continue;
    if (rate == 0.0) {
      acc += v[i] * (hi - lo);
    } else {
      // e^{r hi} - e^{r lo} = e^{r lo} expm1(r (hi - lo))
      acc += v[i] * std::exp(rate * lo) * std::expm1(rate * (hi - lo)) / rate;
    }
  }
  return acc;
}

double exp_moment(const RadonMeasure& measure, double rate) {
  return exp_moment_upto(measure, rate, 0.0);
}

double GridFunction::at(double s) const {
  const auto n = values.size();
  double u = (s - origin) / step;
  if (u < -kSnap || u > static_cast<double>(n - 1) + kSnap) {
    throw DomainError("grid function evaluated outside its grid");
  }
  double fl = std::floor(u);
  if (u - fl > 1.0 - kSnap) fl += 1.0;
  auto i = static_cast<Eigen::Index>(std::clamp(fl, 0.0, static_cast<double>(n - 1)));
  double f = std::clamp(u - static_cast<double>(i), 0.0, 1.0);
  if (i == n - 1 || f <= kSnap) return values[i];
  return values[i] * (1.0 - f) + values[i + 1] * f;
}

int window_cells(double horizon, double step) {
  if (!(step > 0.0)) throw DomainError("grid step must be positive");
  double ratio = horizon / step;
  double m = std::round(ratio);
  if (m < 1.0 || std::abs(ratio - m) > 1e-8 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "grid step h = " << step << " does not divide the window d = " << horizon;
    throw DomainError(os.str());
  }
  return static_cast<int>(m);
}

GridKernel::GridKernel(const RadonMeasure& measure, double step)
    : window_(window_cells(measure.horizon(), step)), step_(step) {
  const double d = measure.horizon();
  auto locate = [&](double s, int& cell, double& frac) {
    double u = (s + d) / step;
    double r = std::round(u);
    if (std::abs(u - r) <= kSnap) u = r;
    cell = static_cast<int>(std::floor(u));
    if (cell >= window_) cell = window_ - 1;
    if (cell < 0) cell = 0;
    frac = u - cell;
  };
  for (const auto& a : measure.atoms()) {
    int i;
    double f;
    locate(a.location, i, f);
    add_point(i, a.weight * (1.0 - f));
    if (f > 0.0) add_point(i + 1, a.weight * f);
  }
  const auto& b = measure.breaks();
  const auto& v = measure.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0.0) continue;
    int ia, ib;
    double fa, fb;
    locate(b[k], ia, fa);
    locate(b[k + 1], ib, fb);
    if (ia == ib) {
      add_segment(ia, fa, fb, v[k]);
      continue;
    }
    int first_full = ia;
    if (fa > 0.0) {
      add_segment(ia, fa, 1.0, v[k]);
      first_full = ia + 1;
    }
    // ib is the cell holding the right end; fb == 1 only when it is node `window`.
    int last_node = ib;
    if (fb >= 1.0) {
      last_node = ib + 1;
    } else if (fb > 0.0) {
      add_segment(ib, 0.0, fb, v[k]);
    }
    if (last_node > first_full) runs_.push_back({first_full, last_node, v[k]});
  }
}

void GridKernel::add_point(int node, double w) {
  for (auto& p : points_) {
    if (p.first == node) {
      p.second += w;
      return;
    }
  }
  points_.emplace_back(node, w);
}

void GridKernel::add_segment(int cell, double u0, double u1, double value) {
  double a = (1.0 - u0) * (1.0 - u0) - (1.0 - u1) * (1.0 - u1);
  double c = u1 * u1 - u0 * u0;
  add_point(cell, value * step_ * a / 2.0);
  add_point(cell + 1, value * step_ * c / 2.0);
}

Eigen::VectorXd GridKernel::dense_weights() const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(window_ + 1);
  for (const auto& [node, x] : points_) w[node] += x;
  for (const auto& run : runs_) {
    for (int j = run.first; j < run.last; ++j) {
      w[j] += run.value * step_ / 2.0;
      w[j + 1] += run.value * step_ / 2.0;
    }
  }
  return w;
}

double integrate(const RadonMeasure& measure, const GridFunction& f) {
  const double d = measure.horizon();
  if (f.values.size() < 2 || f.origin > -d + kSnap * d || f.end() < -kSnap * d) {
    throw DomainError("grid function does not cover [-d, 0]");
  }
  // Restrict to the sub-grid starting at the node at or below -d.
  double u0 = (-d - f.origin) / f.step;
  double r0 = std::round(u0);
  if (std::abs(u0 - r0) <= kSnap) {
    auto first = static_cast<Eigen::Index>(r0);
    int m = window_cells(d, f.step);
    if (first + m < f.values.size()) {
      GridKernel k(measure, f.step);
      Eigen::VectorXd w = k.dense_weights();
      return w.dot(f.values.segment(first, m + 1));
    }
  }
  // Grids not aligned with [-d, 0]: integrate the interpolant piece by piece.
  double acc = 0.0;
  for (const auto& a : measure.atoms()) acc += a.weight * f.at(a.location);
  const auto& b = measure.breaks();
  const auto& v = measure.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0.0) continue;
    double lo = b[k], hi = b[k + 1];
    double s = lo;
    while (s < hi) {
      double node = f.origin + f.step * (std::floor((s - f.origin) / f.step + kSnap) + 1.0);
      double e = std::min(node, hi);
      acc += v[k] * (e - s) * (f.at(s) + f.at(e)) / 2.0;
      s = e;
    }
  }
  return acc;
}

}  // namespace sticky
