#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sticky {

int hardware_threads();

// Runs body(i) for i in [0, n) on `threads` workers with static contiguous
// blocks. If bodies throw, the exception of the lowest index is rethrown
// after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// Sum over a fixed binary tree: the result depends only on the values and
// their order, never on scheduling.
double pairwise_sum(std::span<const double> values);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double tail_bound = 0.0;
};

Estimate estimate(std::span<const double> samples, double tail_bound = 0.0);

enum class GapMode {
  Successive,  // level i against level i+1 on matched noise
  Exact,       // runner already returns per-path errors against an exact solution
};

struct ConvergenceRow {
  double step;
  double gap;
  double ratio;  // gap[i-1] / gap[i]; NaN on the first row
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool monotone = true;  // gaps strictly decreasing
  double mean_ratio = 0.0;
};

// runner(h) returns one trajectory per path sampled on a grid shared by all
// levels (typically the coarsest grid). The gap of a level is the path
// average of the sup-norm difference.
using LevelRunner = std::function<std::vector<Eigen::VectorXd>(double step)>;

ConvergenceTable convergence_study(const LevelRunner& runner, std::span<const double> steps,
                                   GapMode mode);

}  // namespace sticky
