// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include "aissqp/kernels.hpp"

namespace aissqp::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void syr_avx2(double alpha, const double* x, double* a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = alpha * x[j];
    const __m256d vax = _mm256_set1_pd(ax);
    double* col = a + j * n;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      _mm256_storeu_pd(col + i,
                       _mm256_fmadd_pd(vax, _mm256_loadu_pd(x + i), _mm256_loadu_pd(col + i)));
    }
    for (; i < n; ++i) col[i] += ax * x[i];
  }
}

// Elementwise Kahan update; bitwise identical to the scalar reference since no
// fused operations are used.
inline void kahan4(__m256d v, double* s, double* c) {
  const __m256d vs = _mm256_loadu_pd(s);
  const __m256d vc = _mm256_loadu_pd(c);
  const __m256d y = _mm256_sub_pd(v, vc);
  const __m256d t = _mm256_add_pd(vs, y);
  _mm256_storeu_pd(c, _mm256_sub_pd(_mm256_sub_pd(t, vs), y));
  _mm256_storeu_pd(s, t);
}

inline void kahan1(double v, double& s, double& c) {
  const double y = v - c;
  const double t = s + y;
  c = (t - s) - y;
  s = t;
}

void axpy_compensated_avx2(double alpha, const double* x, double* y, double* c,
                           std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) kahan4(_mm256_mul_pd(va, _mm256_loadu_pd(x + i)), y + i, c + i);
  for (; i < n; ++i) kahan1(alpha * x[i], y[i], c[i]);
}

void syr_compensated_avx2(double alpha, const double* x, double* a, double* c,
                          std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = alpha * x[j];
    const __m256d vax = _mm256_set1_pd(ax);
    double* acol = a + j * n;
    double* ccol = c + j * n;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) kahan4(_mm256_mul_pd(vax, _mm256_loadu_pd(x + i)), acol + i, ccol + i);
    for (; i < n; ++i) kahan1(ax * x[i], acol[i], ccol[i]);
  }
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{
      "avx2", dot_avx2, axpy_avx2, syr_avx2, axpy_compensated_avx2, syr_compensated_avx2,
  };
  return table;
}

}  // namespace aissqp::kernels
