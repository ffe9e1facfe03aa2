#include "sticky/kernel.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sticky {

namespace {

constexpr double kTvSlack = 1e-12;

RadonMeasure mixture(const std::vector<RadonMeasure>& comps, const std::vector<double>& alpha) {
  RadonMeasure out(comps.front().horizon());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (alpha[i] != 0.0) out = out + alpha[i] * comps[i];
  }
  return out;
}

[[noreturn]] void tv_violation(double t, double tv, double bound) {
  std::ostringstream os;
  os << "kernel total variation " << tv << " exceeds bound c_T = " << bound << " at t = " << t;
  throw InvariantViolation(os.str());
}

}  // namespace

KernelProcess KernelProcess::constant(RadonMeasure phi) {
  KernelProcess p;
  p.kind_ = Kind::Constant;
  p.mixing_ = Mixing::Affine;
  p.tv_bound_ = total_variation(phi);
  p.components_ = {std::move(phi)};
  return p;
}

KernelProcess KernelProcess::time_varying(RadonMeasure base, RadonMeasure direction,
                                          std::function<double(double)> lambda,
                                          double tv_bound) {
  if (!same_window(base, direction)) throw DomainError("kernel components on different windows");
  KernelProcess p;
  p.kind_ = Kind::DeterministicTimeVarying;
  p.mixing_ = Mixing::Affine;
  p.components_ = {std::move(base), std::move(direction)};
  p.lambda_ = [f = std::move(lambda)](double t, double) { return f(t); };
  p.tv_bound_ = tv_bound;
  return p;
}

KernelProcess KernelProcess::state_modulated(RadonMeasure base, RadonMeasure direction,
                                             Modulation lambda, double tv_bound) {
  if (!same_window(base, direction)) throw DomainError("kernel components on different windows");
  KernelProcess p;
  p.kind_ = Kind::StateModulated;
  p.mixing_ = Mixing::Affine;
  p.components_ = {std::move(base), std::move(direction)};
  p.lambda_ = std::move(lambda);
  p.tv_bound_ = tv_bound;
  return p;
}

KernelProcess KernelProcess::switching(std::vector<RadonMeasure> members, Kind kind,
                                       Modulation lambda, double tv_bound) {
  if (members.empty()) throw DomainError("switching kernel needs at least one member");
  for (const auto& m : members)
    if (!same_window(m, members.front())) throw DomainError("kernel members on different windows");
  KernelProcess p;
  p.kind_ = kind;
  p.mixing_ = Mixing::Switch;
  p.components_ = std::move(members);
  p.lambda_ = std::move(lambda);
  p.tv_bound_ = tv_bound;
  return p;
}

double KernelProcess::lambda(double t, double z) const {
  if (kind_ == Kind::Constant) return 0.0;
  return lambda_(t, z);
}

void KernelProcess::weights(double t, double z, std::vector<double>& alpha) const {
  alpha.assign(components_.size(), 0.0);
  if (kind_ == Kind::Constant) {
    alpha[0] = 1.0;
    return;
  }
  double lam = lambda_(t, z);
  if (!std::isfinite(lam)) {
    std::ostringstream os;
    os << "kernel modulation is not finite at t = " << t << ", z = " << z;
    throw InvariantViolation(os.str());
  }
  if (mixing_ == Mixing::Affine) {
    alpha[0] = 1.0;
    alpha[1] = lam;
    return;
  }
  const auto M = components_.size();
  auto idx = static_cast<std::size_t>(std::clamp(std::floor(lam * static_cast<double>(M)), 0.0,
                                                 static_cast<double>(M - 1)));
  alpha[idx] = 1.0;
}

RadonMeasure sample_kernel(const KernelProcess& process, double t, const PathContext& ctx) {
  if (t < 0.0) throw DomainError("kernel sampled at negative time");
  std::vector<double> alpha;
  process.weights(t, ctx.z, alpha);
  RadonMeasure out = mixture(process.components(), alpha);
  double tv = total_variation(out);
  if (tv > process.tv_bound() * (1.0 + kTvSlack) + kTvSlack) tv_violation(t, tv, process.tv_bound());
  return out;
}

CompiledKernel::CompiledKernel(const KernelProcess& process, double step) : process_(process) {
  for (const auto& c : process.components()) {
    kernels_.emplace_back(c, step);
    tv_.push_back(total_variation(c));
  }
  if (process.kind() == KernelProcess::Kind::Constant) {
    double tv = tv_.front();
    if (tv > process.tv_bound() * (1.0 + kTvSlack) + kTvSlack) tv_violation(0.0, tv, process.tv_bound());
  }
}

double CompiledKernel::apply(double t, double z, const double* values, const double* prefix) const {
  if (is_constant()) return kernels_.front().apply(values, prefix);
  process_.weights(t, z, alpha_);
  double bound = 0.0;
  for (std::size_t i = 0; i < alpha_.size(); ++i) bound += std::abs(alpha_[i]) * tv_[i];
  const double cap = process_.tv_bound() * (1.0 + kTvSlack) + kTvSlack;
  if (bound > cap) {
    // The triangle bound is loose; fall back to the exact realized measure.
    double tv = total_variation(mixture(process_.components(), alpha_));
    if (tv > cap) tv_violation(t, tv, process_.tv_bound());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (alpha_[i] != 0.0) acc += alpha_[i] * kernels_[i].apply(values, prefix);
  }
  return acc;
}

}  // namespace sticky
