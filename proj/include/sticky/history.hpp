#pragma once

#include "sticky/measure.hpp"

#include <Eigen/Dense>

namespace sticky {

// Initial datum x = (x0, x1) on the node grid {-d, -d+h, ..., 0}; the last
// node is x0.
struct HistorySegment {
  double step = 0.01;
  Eigen::VectorXd values;

  static HistorySegment constant(double horizon, double step, double value);
  // Linear from `at_minus_d` at -d to `at_zero` at 0.
  static HistorySegment linear(double horizon, double step, double at_minus_d, double at_zero);
  // base + height * max(0, 1 - |s - center| / half_width).
  static HistorySegment tent(double horizon, double step, double center, double half_width,
                             double height, double base = 0.0);

  int cells() const { return static_cast<int>(values.size()) - 1; }
  double horizon() const { return step * cells(); }
  double x0() const { return values[values.size() - 1]; }
  GridFunction as_function() const { return {-horizon(), step, values}; }
  HistorySegment scaled(double lambda) const { return {step, lambda * values}; }
  // Throws DomainError unless the grid matches d and all values are finite.
  void validate(double horizon) const;
};

// A simulated income path with its pre-history: full[i] is y((i - m) h) for
// i = 0..m+N, m = d/h, so y(t_k) = full[m + k].
struct IncomePath {
  double step = 0.01;
  int window = 0;
  Eigen::VectorXd full;
  Eigen::MatrixXd dZ;      // n x N
  Eigen::MatrixXd dZstar;  // n x N

  int steps() const { return static_cast<int>(full.size()) - window - 1; }
  double horizon() const { return step * steps(); }
  double y(int k) const { return full[window + k]; }
  Eigen::VectorXd path() const { return full.tail(steps() + 1); }
  // Past window y_{t_k} on {-d, ..., 0}.
  HistorySegment segment(int k) const { return {step, full.segment(k, window + 1)}; }
};

}  // namespace sticky
