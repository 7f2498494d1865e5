#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "aissqp/kernels.hpp"

using aissqp::kernels::KernelTable;

namespace {

std::vector<double> random_vec(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> N;
  std::vector<double> v(n);
  for (auto& x : v) x = N(g);
  return v;
}

double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

// Tables under test: always the scalar reference, plus the vector variant when
// this CPU has one.
std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> out{&aissqp::kernels::scalar_table()};
  if (const auto* simd = aissqp::kernels::simd_table()) out.push_back(simd);
  return out;
}

}  // namespace

TEST_CASE("dot matches an extended-precision loop") {
  std::mt19937_64 g(1);
  for (const auto* t : tables()) {
    for (std::size_t n : {0, 1, 3, 4, 7, 8, 15, 16, 33, 67, 256}) {
      const auto a = random_vec(g, n), b = random_vec(g, n);
      const double ref = naive_dot(a, b);
      CHECK(t->dot(a.data(), b.data(), n) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("axpy and syr agree with hand loops") {
  std::mt19937_64 g(2);
  for (const auto* t : tables()) {
    for (std::size_t n : {1, 2, 5, 9, 20, 23}) {
      const auto x = random_vec(g, n);
      auto y = random_vec(g, n);
      auto y_ref = y;
      t->axpy(-0.7, x.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) y_ref[i] += -0.7 * x[i];
      for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(y_ref[i]).epsilon(1e-14));

      auto A = random_vec(g, n * n);
      auto A_ref = A;
      t->syr(1.3, x.data(), A.data(), n);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) A_ref[j * n + i] += 1.3 * x[i] * x[j];
      for (std::size_t k = 0; k < n * n; ++k) CHECK(A[k] == doctest::Approx(A_ref[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("vector and scalar tables are interchangeable") {
  const auto* simd = aissqp::kernels::simd_table();
  if (simd == nullptr) return;
  const auto& ref = aissqp::kernels::scalar_table();
  std::mt19937_64 g(3);
  for (std::size_t n = 0; n < 40; ++n) {
    const auto a = random_vec(g, n), b = random_vec(g, n);
    const double d1 = ref.dot(a.data(), b.data(), n), d2 = simd->dot(a.data(), b.data(), n);
    CHECK(std::abs(d1 - d2) <= 1e-13 * (1.0 + std::abs(d1)) * (1.0 + static_cast<double>(n)));

    // Compensated accumulators must track each other over many updates.
    std::vector<double> y1(n, 0.0), c1(n, 0.0), y2(n, 0.0), c2(n, 0.0);
    std::vector<double> A1(n * n, 0.0), C1(n * n, 0.0), A2(n * n, 0.0), C2(n * n, 0.0);
    for (int rep = 0; rep < 200; ++rep) {
      const auto x = random_vec(g, n);
      const double w = 1.0 + rep;
      ref.axpy_compensated(w, x.data(), y1.data(), c1.data(), n);
      simd->axpy_compensated(w, x.data(), y2.data(), c2.data(), n);
      ref.syr_compensated(w, x.data(), A1.data(), C1.data(), n);
      simd->syr_compensated(w, x.data(), A2.data(), C2.data(), n);
    }
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-13));
    for (std::size_t k = 0; k < n * n; ++k) CHECK(A1[k] == doctest::Approx(A2[k]).epsilon(1e-13));
  }
}

TEST_CASE("compensated axpy beats naive summation on a cancellation-heavy stream") {
  // 1e16 + many ones: naive double summation loses every 1.
  for (const auto* t : tables()) {
    double y = 1e16, c = 0.0;
    const double one = 1.0;
    for (int i = 0; i < 1000; ++i) t->axpy_compensated(1.0, &one, &y, &c, 1);
    CHECK((y - 1e16) + (-c) == doctest::Approx(1000.0));
  }
}

TEST_CASE("active table honours the scalar override") {
  // The override is read once, so this only checks consistency with the
  // environment at process start.
  const char* env = std::getenv("AISSQP_SIMD");
  if (env != nullptr && std::string(env) == "scalar") {
    CHECK(aissqp::kernels::active().name == "scalar");
  } else if (aissqp::kernels::simd_table() != nullptr) {
    CHECK(aissqp::kernels::active().name == aissqp::kernels::simd_table()->name);
  } else {
    CHECK(aissqp::kernels::active().name == "scalar");
  }
}
