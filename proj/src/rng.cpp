#include "sticky/rng.hpp"

#include "sticky/errors.hpp"
#include "sticky/params.hpp"

#include <cmath>
#include <numbers>

namespace sticky {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double unit(std::uint32_t x) { return (static_cast<double>(x) + 0.5) * 0x1p-32; }

}  // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 4> gaussian4(std::uint64_t seed, Purpose purpose, std::uint64_t step,
                                std::uint64_t path, std::uint32_t block, std::uint32_t stream,
                                int pairs) {
  Philox4x32Key key{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32) ^
                        (static_cast<std::uint32_t>(purpose) * kWeyl0)};
  // Steps and paths beyond 2^32 wrap; no run here comes close.
  Philox4x32Counter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(path), block,
                        stream};
  auto x = philox4x32(ctr, key);
  std::array<double, 4> out{};
  for (int p = 0; p < pairs && p < 2; ++p) {
    double u1 = unit(x[2 * p]);
    double u2 = unit(x[2 * p + 1]);
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    out[2 * p] = rad * std::cos(ang);
    out[2 * p + 1] = rad * std::sin(ang);
  }
  return out;
}

void NoisePlan::validate() const {
  if (n < 1) throw ConfigError("noise dimension must be positive");
  if (!(step > 0.0) || substeps < 1) throw ConfigError("noise step and substeps must be positive");
  if (C1.rows() != n || C2.rows() != n) throw ConfigError("correlation factors do not match n");
  validate_correlation(C1, C2);
}

NoiseStream::NoiseStream(const NoisePlan& plan, std::uint64_t path)
    : plan_(&plan),
      path_(path),
      idio_(plan.has_idiosyncratic()),
      scale_(std::sqrt(plan.fine_step())),
      buf_(plan.n) {}

void NoiseStream::fine(Purpose purpose, std::uint64_t k, Eigen::Ref<Eigen::VectorXd> out) {
  const int n = plan_->n;
  for (int b = 0; b * 4 < n; ++b) {
    const int left = n - 4 * b;
    auto g = gaussian4(plan_->seed, purpose, k, path_, static_cast<std::uint32_t>(b), plan_->stream,
                       left > 2 ? 2 : 1);
    for (int j = 0; j < 4 && 4 * b + j < n; ++j) out[4 * b + j] = g[j];
  }
}

void NoiseStream::next(Eigen::Ref<Eigen::VectorXd> dZ, Eigen::Ref<Eigen::VectorXd> dZstar) {
  const auto s = static_cast<std::uint64_t>(plan_->substeps);
  if (s == 1) {
    fine(Purpose::Market, step_, dZ);
    dZ *= scale_;
    if (idio_) {
      fine(Purpose::Idiosyncratic, step_, dZstar);
      dZstar *= scale_;
    } else {
      dZstar.setZero();
    }
    ++step_;
    return;
  }
  dZ.setZero();
  dZstar.setZero();
  for (std::uint64_t j = 0; j < s; ++j) {
    fine(Purpose::Market, step_ * s + j, buf_);
    dZ += scale_ * buf_;
    if (idio_) {
      fine(Purpose::Idiosyncratic, step_ * s + j, buf_);
      dZstar += scale_ * buf_;
    }
  }
  ++step_;
}

Eigen::MatrixXd Increments::income_noise(const Eigen::MatrixXd& C1, const Eigen::MatrixXd& C2) const {
  return C1 * dZ + C2 * dZstar;
}

Increments generate_noise(const NoisePlan& plan, std::uint64_t path, std::size_t steps) {
  plan.validate();
  Increments inc;
  const auto N = static_cast<Eigen::Index>(steps);
  inc.dZ.resize(plan.n, N);
  inc.dZstar.resize(plan.n, N);
  NoiseStream stream(plan, path);
  for (Eigen::Index k = 0; k < N; ++k) stream.next(inc.dZ.col(k), inc.dZstar.col(k));
  return inc;
}

}  // namespace sticky
