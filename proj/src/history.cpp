#include "sticky/history.hpp"

#include "sticky/errors.hpp"

#include <cmath>

namespace sticky {

namespace {

Eigen::VectorXd nodes(double horizon, double step) {
  int m = window_cells(horizon, step);
  return Eigen::VectorXd::LinSpaced(m + 1, 0.0, static_cast<double>(m)).array() * step - horizon;
}

}  // namespace

HistorySegment HistorySegment::constant(double horizon, double step, double value) {
  int m = window_cells(horizon, step);
  return {step, Eigen::VectorXd::Constant(m + 1, value)};
}

HistorySegment HistorySegment::linear(double horizon, double step, double at_minus_d,
                                      double at_zero) {
  Eigen::VectorXd s = nodes(horizon, step);
  Eigen::VectorXd v = at_zero + (at_zero - at_minus_d) * s.array() / horizon;
  v[v.size() - 1] = at_zero;
  return {step, v};
}

HistorySegment HistorySegment::tent(double horizon, double step, double center, double half_width,
                                    double height, double base) {
  if (!(half_width > 0.0)) throw DomainError("tent half-width must be positive");
  Eigen::VectorXd s = nodes(horizon, step);
  Eigen::VectorXd v(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    v[i] = base + height * std::max(0.0, 1.0 - std::abs(s[i] - center) / half_width);
  }
  return {step, v};
}

void HistorySegment::validate(double horizon) const {
  int m = window_cells(horizon, step);
  if (values.size() != m + 1) {
    throw DomainError("history grid has " + std::to_string(values.size()) + " nodes, expected " +
                      std::to_string(m + 1));
  }
  if (!values.allFinite()) throw DomainError("history values must be finite");
}

}  // namespace sticky
