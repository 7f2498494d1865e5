// NEON kernels for AArch64, where Advanced SIMD is baseline.

#include <arm_neon.h>

#include "aissqp/kernels.hpp"

namespace aissqp::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void syr_neon(double alpha, const double* x, double* a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = alpha * x[j];
    const float64x2_t vax = vdupq_n_f64(ax);
    double* col = a + j * n;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(col + i, vfmaq_f64(vld1q_f64(col + i), vax, vld1q_f64(x + i)));
    for (; i < n; ++i) col[i] += ax * x[i];
  }
}

inline void kahan2(float64x2_t v, double* s, double* c) {
  const float64x2_t vs = vld1q_f64(s);
  const float64x2_t y = vsubq_f64(v, vld1q_f64(c));
  const float64x2_t t = vaddq_f64(vs, y);
  vst1q_f64(c, vsubq_f64(vsubq_f64(t, vs), y));
  vst1q_f64(s, t);
}

inline void kahan1(double v, double& s, double& c) {
  const double y = v - c;
  const double t = s + y;
  c = (t - s) - y;
  s = t;
}

void axpy_compensated_neon(double alpha, const double* x, double* y, double* c, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) kahan2(vmulq_f64(va, vld1q_f64(x + i)), y + i, c + i);
  for (; i < n; ++i) kahan1(alpha * x[i], y[i], c[i]);
}

void syr_compensated_neon(double alpha, const double* x, double* a, double* c, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = alpha * x[j];
    const float64x2_t vax = vdupq_n_f64(ax);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) kahan2(vmulq_f64(vax, vld1q_f64(x + i)), a + j * n + i, c + j * n + i);
    for (; i < n; ++i) kahan1(ax * x[i], a[j * n + i], c[j * n + i]);
  }
}

}  // namespace

const KernelTable& neon_table() noexcept {
  static const KernelTable table{
      "neon", dot_neon, axpy_neon, syr_neon, axpy_compensated_neon, syr_compensated_neon,
  };
  return table;
}

}  // namespace aissqp::kernels
