#pragma once

// Signed Radon measures on [-d, 0] with no mass at 0, restricted to finitely
// many atoms plus a piecewise-constant density. The representation is closed
// under +, -, scaling, Hahn-Jordan splitting and lattice min/max, so order
// comparisons are exact on the symbolic form.

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace sticky {

struct MeasureAccess;

struct Atom {
  double location;
  double weight;
  friend bool operator==(const Atom&, const Atom&) = default;
};

// A density piece starts at `start` and runs to the next piece's start (or 0).
struct DensityPiece {
  double start;
  double value;
};

class RadonMeasure {
 public:
  // Zero measure on [-horizon, 0].
  explicit RadonMeasure(double horizon = 1.0);

  // Validating constructor. Atoms must be strictly increasing in [-d, 0);
  // density pieces strictly increasing, the first one starting at -d.
  RadonMeasure(double horizon, std::vector<Atom> atoms,
               std::vector<DensityPiece> density);

  static RadonMeasure dirac(double horizon, double location, double weight = 1.0);
  // Density `value` on [from, to), zero elsewhere.
  static RadonMeasure flat(double horizon, double value, double from, double to);
  static RadonMeasure flat(double horizon, double value) {
    return flat(horizon, value, -horizon, 0.0);
  }

  double horizon() const { return horizon_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  // K+1 breakpoints -d = b_0 < ... < b_K = 0 and K piece values.
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<DensityPiece> density() const;

  bool is_zero() const;
  double atom_weight_at(double s) const;
  double density_at(double s) const;

  friend bool operator==(const RadonMeasure&, const RadonMeasure&) = default;

  friend RadonMeasure operator+(const RadonMeasure& a, const RadonMeasure& b);
  friend RadonMeasure operator-(const RadonMeasure& a, const RadonMeasure& b);
  friend RadonMeasure operator-(const RadonMeasure& a);
  friend RadonMeasure operator*(double k, const RadonMeasure& a);

 private:
  struct Canonical {};
  RadonMeasure(Canonical, double horizon, std::vector<Atom> atoms,
               std::vector<double> breaks, std::vector<double> values);
  void canonicalize();

  double horizon_;
  std::vector<Atom> atoms_;
  std::vector<double> breaks_;
  std::vector<double> values_;

  friend struct MeasureAccess;
};

// True when both measures live on the same window [-d, 0].
bool same_window(const RadonMeasure& a, const RadonMeasure& b);

enum class OrderRelation { LessOrEqual, GreaterOrEqual, Equal, Incomparable };

const char* to_string(OrderRelation r);

struct HahnJordan {
  RadonMeasure positive;
  RadonMeasure negative;
  double mass_m;  // total mass of the negative part
};

HahnJordan hahn_jordan(const RadonMeasure& measure);
double total_variation(const RadonMeasure& measure);
double total_mass(const RadonMeasure& measure);
bool is_nonnegative(const RadonMeasure& measure, double tol = 0.0);

// Lattice order: a <= b iff b - a is a nonnegative measure. Entries of b - a
// with magnitude <= tol are treated as zero (tol = 0 is the exact test).
OrderRelation compare(const RadonMeasure& a, const RadonMeasure& b, double tol = 0.0);

RadonMeasure lattice_min(const RadonMeasure& a, const RadonMeasure& b);
RadonMeasure lattice_max(const RadonMeasure& a, const RadonMeasure& b);

// Closed sub-support pieces of the measure's negative part: atoms as
// degenerate intervals, negative density pieces as their closures.
std::vector<std::pair<double, double>> negative_support(const RadonMeasure& measure);
std::vector<std::pair<double, double>> support(const RadonMeasure& measure);

// ∫ e^{rate s} φ(ds), exact.
double exp_moment(const RadonMeasure& measure, double rate);
// ∫_{[-d, upper]} e^{rate s} φ(ds), atoms at `upper` included.
double exp_moment_upto(const RadonMeasure& measure, double rate, double upper);

// Function sampled on an equispaced grid, linearly interpolated in between.
struct GridFunction {
  double origin = 0.0;
  double step = 1.0;
  Eigen::VectorXd values;

  double end() const { return origin + step * static_cast<double>(values.size() - 1); }
  double at(double s) const;
};

// ∫ f(s) φ(ds): atoms read the linear interpolant, density pieces integrate
// the interpolant exactly.
double integrate(const RadonMeasure& measure, const GridFunction& f);

// The measure compiled against the node grid {-d, -d+h, ..., 0}. Applying it
// to a window of node values reproduces integrate() on the interpolant. Full
// density cells are evaluated from a running trapezoid prefix sum so the cost
// per application is independent of the window length.
class GridKernel {
 public:
  GridKernel() = default;
  GridKernel(const RadonMeasure& measure, double step);

  int window() const { return window_; }
  double step() const { return step_; }

  // values[j], prefix[j] for j = 0..window; prefix is the cumulative
  // trapezoid integral of values (any additive offset cancels).
  double apply(const double* values, const double* prefix) const {
    double acc = 0.0;
    for (const auto& [node, w] : points_) acc += w * values[node];
    for (const auto& run : runs_) acc += run.value * (prefix[run.last] - prefix[run.first]);
    return acc;
  }

  Eigen::VectorXd dense_weights() const;

 private:
  struct Run {
    int first;
    int last;
    double value;
  };
  void add_segment(int cell, double u0, double u1, double value);
  void add_point(int node, double w);

  int window_ = 0;
  double step_ = 1.0;
  std::vector<std::pair<int, double>> points_;
  std::vector<Run> runs_;
};

// Number of grid cells covering [-d, 0]; throws unless step divides d.
int window_cells(double horizon, double step);

}  // namespace sticky
