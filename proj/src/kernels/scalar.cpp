#include "aissqp/kernels.hpp"

namespace aissqp::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void syr_scalar(double alpha, const double* x, double* a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = alpha * x[j];
    double* col = a + j * n;
    for (std::size_t i = 0; i < n; ++i) col[i] += ax * x[i];
  }
}

inline void kahan_add(double v, double& s, double& c) {
  const double y = v - c;
  const double t = s + y;
  c = (t - s) - y;
  s = t;
}

void axpy_compensated_scalar(double alpha, const double* x, double* y, double* c,
                             std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) kahan_add(alpha * x[i], y[i], c[i]);
}

void syr_compensated_scalar(double alpha, const double* x, double* a, double* c,
                            std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = alpha * x[j];
    for (std::size_t i = 0; i < n; ++i) kahan_add(ax * x[i], a[j * n + i], c[j * n + i]);
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      "scalar",        dot_scalar, axpy_scalar, syr_scalar, axpy_compensated_scalar,
      syr_compensated_scalar,
  };
  return table;
}

}  // namespace aissqp::kernels
