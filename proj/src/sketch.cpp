#include "aissqp/sketch.hpp"

#include <stdexcept>

#include "aissqp/kernels.hpp"

namespace aissqp {

void SketchConfig::validate() const {
  if (mode != SketchMode::exact && tau < 1) {
    throw std::invalid_argument("sketching steps tau must be >= 1 (got " + std::to_string(tau) +
                                ")");
  }
}

std::string SketchConfig::label() const {
  return mode == SketchMode::exact ? "exact" : std::to_string(tau);
}

std::uint64_t exact_solve_flops(int n) noexcept {
  const auto u = static_cast<std::uint64_t>(n);
  return u * u * u / 3 + u * u;
}

std::uint64_t kaczmarz_step_flops(int n) noexcept { return 3 * static_cast<std::uint64_t>(n); }

std::uint64_t gaussian_step_flops(int n) noexcept {
  const auto u = static_cast<std::uint64_t>(n);
  return u * u + 3 * u;
}

NewtonDirection solve_exact(const KktSystem& sys) {
  Eigen::PartialPivLU<Matrix> lu(sys.K);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw std::runtime_error("KKT matrix is singular or ill-conditioned (rcond = " +
                             std::to_string(rcond) + ")");
  }
  NewtonDirection dir{lu.solve(sys.rhs), exact_solve_flops(sys.n())};
  const double residual = (sys.K * dir.z - sys.rhs).norm();
  if (!(residual <= 1e-8 * (1.0 + sys.rhs.norm()))) {
    throw std::runtime_error("KKT solve residual too large: " + std::to_string(residual));
  }
  return dir;
}

Vector sketch_step(const KktSystem& sys, const Vector& z, const Vector& s) {
  const Vector Ks = sys.K * s;
  const double denom = Ks.squaredNorm();  // s^T K^2 s for symmetric K
  if (denom == 0.0) return z;
  // s^T (K z - rhs) = (K s)^T z - s^T rhs
  const double num = Ks.dot(z) - s.dot(sys.rhs);
  return z - (num / denom) * Ks;
}

std::uint64_t kaczmarz_step(const KktSystem& sys, Eigen::Ref<Vector> z, Eigen::Index i) {
  const auto n = static_cast<std::size_t>(sys.K.rows());
  const double* col = sys.K.data() + i * sys.K.rows();  // column i == row i
  const auto& kt = kernels::active();
  const double norm2 = kt.dot(col, col, n);
  if (norm2 != 0.0) {
    const double resid = kt.dot(col, z.data(), n) - sys.rhs[i];
    kt.axpy(-resid / norm2, col, z.data(), n);
  }
  return kaczmarz_step_flops(static_cast<int>(n));
}

NewtonDirection solve_sketched(const KktSystem& sys, const SketchConfig& config,
                               RandomStream& rng) {
  if (config.mode == SketchMode::exact) {
    throw std::invalid_argument("solve_sketched requires a sketched mode");
  }
  config.validate();
  const int n = sys.n();
  NewtonDirection dir{Vector::Zero(n), 0};
  if (config.mode == SketchMode::kaczmarz) {
    for (int j = 0; j < config.tau; ++j) {
      dir.flops_used += kaczmarz_step(sys, dir.z, static_cast<Eigen::Index>(rng.index(n)));
    }
  } else {
    Vector s(n);
    for (int j = 0; j < config.tau; ++j) {
      for (int i = 0; i < n; ++i) s[i] = rng.normal();
      dir.z = sketch_step(sys, dir.z, s);
      dir.flops_used += gaussian_step_flops(n);
    }
  }
  return dir;
}

NewtonDirection solve(const KktSystem& sys, const SketchConfig& config, RandomStream& rng) {
  if (config.mode == SketchMode::exact) return solve_exact(sys);
  return solve_sketched(sys, config, rng);
}

}  // namespace aissqp
