#pragma once

// Time- and path-dependent delay kernels phi(t, omega). A process is a finite
// mixture of fixed component measures with weights that depend on t and on
// the scalar driving value z = Z_1(t):
//   Affine:  phi(t) = components[0] + lambda(t, z) * components[1]
//   Switch:  phi(t) = members[floor(lambda(t, z) * M)], lambda in [0, 1]

#include "sticky/measure.hpp"

#include <functional>
#include <vector>

namespace sticky {

struct PathContext {
  double z = 0.0;
};

class KernelProcess {
 public:
  enum class Kind { Constant, DeterministicTimeVarying, StateModulated };
  enum class Mixing { Affine, Switch };
  using Modulation = std::function<double(double t, double z)>;

  KernelProcess() = default;
  static KernelProcess constant(RadonMeasure phi);
  static KernelProcess time_varying(RadonMeasure base, RadonMeasure direction,
                                    std::function<double(double)> lambda, double tv_bound);
  static KernelProcess state_modulated(RadonMeasure base, RadonMeasure direction,
                                       Modulation lambda, double tv_bound);
  static KernelProcess switching(std::vector<RadonMeasure> members, Kind kind,
                                 Modulation lambda, double tv_bound);

  Kind kind() const { return kind_; }
  Mixing mixing() const { return mixing_; }
  double horizon() const { return components_.front().horizon(); }
  double tv_bound() const { return tv_bound_; }
  const std::vector<RadonMeasure>& components() const { return components_; }

  double lambda(double t, double z) const;
  // Mixture weights alpha_i(t, z), one per component.
  void weights(double t, double z, std::vector<double>& alpha) const;

 private:
  Kind kind_ = Kind::Constant;
  Mixing mixing_ = Mixing::Affine;
  std::vector<RadonMeasure> components_{RadonMeasure(1.0)};
  Modulation lambda_;
  double tv_bound_ = 0.0;
};

// Realized measure at (t, path). Throws InvariantViolation when its total
// variation exceeds the declared bound.
RadonMeasure sample_kernel(const KernelProcess& process, double t, const PathContext& ctx);

// A kernel process compiled against the node grid of step h.
class CompiledKernel {
 public:
  CompiledKernel(const KernelProcess& process, double step);

  bool is_constant() const { return process_.kind() == KernelProcess::Kind::Constant; }
  int window() const { return kernels_.front().window(); }

  // Integral of the realized kernel at (t, z) against node values; checks
  // the total-variation bound on the way.
  double apply(double t, double z, const double* values, const double* prefix) const;

 private:
  KernelProcess process_;
  std::vector<GridKernel> kernels_;
  std::vector<double> tv_;
  mutable std::vector<double> alpha_;
};

}  // namespace sticky
