#pragma once

// Counter-based Gaussian noise. Every draw is a pure function of
// (seed, purpose, fine step, path, block, stream), so paths can be generated
// in any order on any thread, and coarse increments are sums of the same fine
// draws at every refinement level.

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace sticky {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32-10 (Salmon et al.).
Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key);

enum class Purpose : std::uint32_t {
  Market = 1,     // Z
  Idiosyncratic,  // Z*
  Auxiliary,      // anything else (pilot paths, random scenarios, ...)
};

// Four standard normals for one counter via two Box-Muller pairs. With
// pairs = 1 only the first two are computed (the rest are left at 0).
std::array<double, 4> gaussian4(std::uint64_t seed, Purpose purpose, std::uint64_t step,
                                std::uint64_t path, std::uint32_t block, std::uint32_t stream,
                                int pairs = 2);

struct NoisePlan {
  int n = 1;
  double step = 0.01;  // coarse step h
  int substeps = 1;    // fine draws per coarse step
  std::uint64_t seed = 1;
  std::uint32_t stream = 0;
  Eigen::MatrixXd C1;
  Eigen::MatrixXd C2;

  // Throws ConfigError unless the correlation factors are valid.
  void validate() const;
  bool has_idiosyncratic() const { return C2.size() > 0 && !C2.isZero(0.0); }
  double fine_step() const { return step / substeps; }
};

// Increments of one path, generated lazily step by step.
class NoiseStream {
 public:
  NoiseStream(const NoisePlan& plan, std::uint64_t path);

  // Fills dZ (and dZstar when the plan has idiosyncratic noise, else zero)
  // for the next coarse step.
  void next(Eigen::Ref<Eigen::VectorXd> dZ, Eigen::Ref<Eigen::VectorXd> dZstar);
  std::uint64_t position() const { return step_; }

 private:
  void fine(Purpose purpose, std::uint64_t k, Eigen::Ref<Eigen::VectorXd> out);

  const NoisePlan* plan_;
  std::uint64_t path_;
  std::uint64_t step_ = 0;
  bool idio_;
  double scale_;
  Eigen::VectorXd buf_;
};

struct Increments {
  Eigen::MatrixXd dZ;      // n x N
  Eigen::MatrixXd dZstar;  // n x N, zero when the plan has no idiosyncratic noise

  Eigen::Index steps() const { return dZ.cols(); }
  // Z^y increments C1 dZ + C2 dZ*.
  Eigen::MatrixXd income_noise(const Eigen::MatrixXd& C1, const Eigen::MatrixXd& C2) const;
};

Increments generate_noise(const NoisePlan& plan, std::uint64_t path, std::size_t steps);

}  // namespace sticky
