#include "sticky/mc.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace sticky {

int hardware_threads() {
  auto n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  auto workers = static_cast<std::size_t>(std::max(1, threads));
  workers = std::min(workers, n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> error_index(workers, std::numeric_limits<std::size_t>::max());

  auto run_block = [&](std::size_t w) {
    std::size_t lo = n * w / workers;
    std::size_t hi = n * (w + 1) / workers;
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[w] = std::current_exception();
        error_index[w] = i;
        return;
      }
    }
  };

  if (workers == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run_block, w);
    run_block(0);
    for (auto& t : pool) t.join();
  }
  // Blocks are contiguous and ordered, so the first failing block holds the
  // lowest failing index.
  for (std::size_t w = 0; w < workers; ++w)
    if (errors[w]) std::rethrow_exception(errors[w]);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  auto half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

Estimate estimate(std::span<const double> samples, double tail_bound) {
  Estimate e;
  e.n_paths = samples.size();
  e.tail_bound = tail_bound;
  if (samples.empty()) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double d = samples[i] - e.mean;
      sq[i] = d * d;
    }
    double var = pairwise_sum(sq) / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return e;
}

namespace {

double mean_sup_gap(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>* b) {
  if (b && a.size() != b->size()) throw DomainError("convergence levels differ in path count");
  std::vector<double> sups(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (b) {
      if ((*b)[p].size() != a[p].size()) throw DomainError("convergence levels sampled on different grids");
      sups[p] = (a[p] - (*b)[p]).cwiseAbs().maxCoeff();
    } else {
      sups[p] = a[p].cwiseAbs().maxCoeff();
    }
  }
  return pairwise_sum(sups) / static_cast<double>(sups.size());
}

}  // namespace

ConvergenceTable convergence_study(const LevelRunner& runner, std::span<const double> steps,
                                   GapMode mode) {
  const std::size_t need = mode == GapMode::Successive ? 3 : 2;
  if (steps.size() < need) throw DomainError("convergence study needs more levels");
  std::vector<std::vector<Eigen::VectorXd>> runs;
  for (double h : steps) runs.push_back(runner(h));

  ConvergenceTable t;
  const std::size_t levels = mode == GapMode::Successive ? steps.size() - 1 : steps.size();
  for (std::size_t i = 0; i < levels; ++i) {
    double gap = mode == GapMode::Successive ? mean_sup_gap(runs[i], &runs[i + 1])
                                             : mean_sup_gap(runs[i], nullptr);
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (i > 0) {
      ratio = t.rows.back().gap / gap;
      if (!(gap < t.rows.back().gap)) t.monotone = false;
    }
    t.rows.push_back({steps[i], gap, ratio});
  }
  double acc = 0.0;
  for (std::size_t i = 1; i < t.rows.size(); ++i) acc += t.rows[i].ratio;
  t.mean_ratio = acc / static_cast<double>(t.rows.size() - 1);
  return t;
}

}  // namespace sticky
