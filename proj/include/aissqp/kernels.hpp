#pragma once
// Dense inner-loop kernels used by the solver and the online estimators.
//
// Each kernel has a portable scalar reference implementation and, where the
// target supports it, a vectorized variant (AVX2+FMA on x86-64, NEON on
// AArch64). The active table is chosen once at first use from the CPU's
// reported features; setting AISSQP_SIMD=scalar in the environment forces the
// reference path.
//
// Matrices are dense, column-major, n x n with leading dimension n (the
// Eigen::MatrixXd default layout).

#include <cstddef>
#include <span>
#include <string_view>

namespace aissqp::kernels {

struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // A += alpha * x x^T over the full n x n block.
  void (*syr)(double alpha, const double* x, double* a, std::size_t n);

  // Kahan-compensated y += alpha * x, with running compensation c.
  void (*axpy_compensated)(double alpha, const double* x, double* y, double* c,
                           std::size_t n);

  // Kahan-compensated A += alpha * x x^T, with running compensation C.
  void (*syr_compensated)(double alpha, const double* x, double* a, double* c,
                          std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// Vectorized table for this build and CPU, or nullptr when the CPU lacks the
/// required instructions or the build has no vector variant.
const KernelTable* simd_table() noexcept;

/// Table used by the library. Resolved once; thread-safe.
const KernelTable& active() noexcept;

// Span conveniences over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void syr(double alpha, std::span<const double> x, std::span<double> a) {
  active().syr(alpha, x.data(), a.data(), x.size());
}

inline void axpy_compensated(double alpha, std::span<const double> x,
                             std::span<double> y, std::span<double> c) {
  active().axpy_compensated(alpha, x.data(), y.data(), c.data(), x.size());
}

inline void syr_compensated(double alpha, std::span<const double> x,
                            std::span<double> a, std::span<double> c) {
  active().syr_compensated(alpha, x.data(), a.data(), c.data(), x.size());
}

}  // namespace aissqp::kernels
