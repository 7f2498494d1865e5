#pragma once
// Exact and sketch-and-project solvers for the KKT system.
//
// A sketch step projects the current guess z onto {z : s^T K z = s^T rhs}:
//
//   z' = z - (s^T r) / (s^T K^2 s) * K s,   r = K z - rhs,
//
// with the scalar pseudoinverse taking 0 to 0. Coordinate sketches s = e_i
// reduce this to one row of K, giving O(n) work per step.

#include <cstdint>
#include <string>

#include "aissqp/kkt.hpp"
#include "aissqp/rng.hpp"

namespace aissqp {

enum class SketchMode { exact, kaczmarz, gaussian_vector };

struct SketchConfig {
  SketchMode mode = SketchMode::exact;
  int tau = 0;  // sketching steps; ignored for exact

  static SketchConfig exact() { return {SketchMode::exact, 0}; }
  static SketchConfig kaczmarz(int tau) { return {SketchMode::kaczmarz, tau}; }
  static SketchConfig gaussian(int tau) { return {SketchMode::gaussian_vector, tau}; }

  /// Throws std::invalid_argument when tau < 1 for a sketched mode.
  void validate() const;

  /// "exact" or the step count.
  std::string label() const;
};

/// Flops are counted with a fused multiply-add as one operation.
struct NewtonDirection {
  Vector z;
  std::uint64_t flops_used = 0;
};

inline std::uint64_t flops(const NewtonDirection& dir) noexcept { return dir.flops_used; }

/// n^3/3 for the factorization plus n^2 for the two triangular solves.
std::uint64_t exact_solve_flops(int n) noexcept;

/// Three length-n passes per coordinate step: row dot, column norm, update.
std::uint64_t kaczmarz_step_flops(int n) noexcept;

/// Gaussian vectors need K s (n^2) plus three length-n passes.
std::uint64_t gaussian_step_flops(int n) noexcept;

/// Dense LU with partial pivoting. Throws std::runtime_error when K is
/// singular or too ill-conditioned to trust.
NewtonDirection solve_exact(const KktSystem& sys);

/// One projection step along an arbitrary sketch vector s.
Vector sketch_step(const KktSystem& sys, const Vector& z, const Vector& s);

/// In-place coordinate step along e_i. Returns flops used.
std::uint64_t kaczmarz_step(const KktSystem& sys, Eigen::Ref<Vector> z, Eigen::Index i);

/// tau sketch steps from z = 0. config.mode must not be exact.
NewtonDirection solve_sketched(const KktSystem& sys, const SketchConfig& config,
                               RandomStream& rng);

/// Dispatches on config.mode.
NewtonDirection solve(const KktSystem& sys, const SketchConfig& config, RandomStream& rng);

}  // namespace aissqp
