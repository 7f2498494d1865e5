#include "aissqp/selftest.hpp"

#include <cmath>
#include <sstream>

#include "aissqp/inference.hpp"
#include "aissqp/kernels.hpp"
#include "aissqp/sketch.hpp"

namespace aissqp {
namespace {

Vector random_vector(RandomStream& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Matrix random_matrix(RandomStream& rng, int r, int c) {
  Matrix a(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) a(i, j) = rng.normal();
  return a;
}

KktSystem random_kkt(RandomStream& rng, int d, int m) {
  const Matrix H = random_matrix(rng, d, d);
  const Matrix B = H * H.transpose() / d + Matrix::Identity(d, d);
  return assemble(B, random_matrix(rng, m, d), random_vector(rng, d), random_vector(rng, m));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

SelfTestResult kernel_equivalence(RandomStream& rng) {
  const kernels::KernelTable* simd = kernels::simd_table();
  if (simd == nullptr) return {"kernel_equivalence", true, "no vector kernels on this CPU"};
  const auto& ref = kernels::scalar_table();
  double worst = 0.0;
  for (int n = 1; n <= 37; ++n) {
    const Vector a = random_vector(rng, n), b = random_vector(rng, n);
    worst = std::max(worst, std::abs(ref.dot(a.data(), b.data(), n) - simd->dot(a.data(), b.data(), n)));
    Matrix A1 = random_matrix(rng, n, n), A2 = A1;
    ref.syr(0.7, a.data(), A1.data(), n);
    simd->syr(0.7, a.data(), A2.data(), n);
    worst = std::max(worst, (A1 - A2).cwiseAbs().maxCoeff());
  }
  return {"kernel_equivalence", worst < 1e-12, std::string(simd->name) + " max diff " + fmt(worst)};
}

SelfTestResult random_scaling_recursion(RandomStream& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 7, T = 200;
    RandomScalingState state(n);
    std::vector<Vector> means;
    Vector sum = Vector::Zero(n);
    Vector walk = random_vector(rng, n);
    for (int t = 0; t < T; ++t) {
      walk += 0.3 * random_vector(rng, n);
      state.update(walk);
      sum += walk;
      means.push_back(sum / (t + 1));
    }
    Matrix direct = Matrix::Zero(n, n);
    for (int i = 1; i <= T; ++i) {
      const Vector diff = means[i - 1] - means[T - 1];
      direct += double(i) * i * diff * diff.transpose();
    }
    direct /= double(T) * T;
    worst = std::max(worst, (state.materialize() - direct).norm() / direct.norm());
  }
  return {"random_scaling_recursion", worst < 1e-10, "max rel err " + fmt(worst)};
}

SelfTestResult quantile_table() {
  const bool ok = random_scaling_quantile(0.90) == 3.875 && random_scaling_quantile(0.95) == 5.323 &&
                  random_scaling_quantile(0.975) == 6.747 && random_scaling_quantile(0.99) == 8.613;
  return {"quantile_table", ok, ""};
}

SelfTestResult sketch_contraction(RandomStream& rng) {
  int violations = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const KktSystem sys = random_kkt(rng, 6, 2);
    const Vector exact = solve_exact(sys).z;
    Vector z = Vector::Zero(sys.n());
    double prev = (z - exact).norm();
    for (int j = 0; j < 30; ++j) {
      kaczmarz_step(sys, z, static_cast<Eigen::Index>(rng.index(sys.n())));
      const double err = (z - exact).norm();
      if (err > prev * (1.0 + 1e-12) + 1e-14) ++violations;
      prev = err;
    }
  }
  return {"sketch_contraction", violations == 0, std::to_string(violations) + " violations"};
}

SelfTestResult exact_solver(RandomStream& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const KktSystem sys = random_kkt(rng, 5, 2);
    const Vector oracle = sys.K.inverse() * sys.rhs;
    worst = std::max(worst, (solve_exact(sys).z - oracle).cwiseAbs().maxCoeff());
  }
  return {"exact_solver", worst < 1e-9, "max abs err " + fmt(worst)};
}

SelfTestResult regularization_floor(RandomStream& rng) {
  double worst = 1e300;
  const double gamma = 1e-3;
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix H = random_matrix(rng, 6, 6);
    const Matrix sym = 0.5 * (H + H.transpose());
    const Matrix G = random_matrix(rng, 2, 6);
    const Regularized reg = regularize(sym, G, gamma);
    const Matrix Z = null_space_basis(G);
    const Matrix reduced = Z.transpose() * reg.B * Z;
    worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Matrix>(reduced).eigenvalues().minCoeff());
  }
  return {"regularization_floor", worst >= gamma - 1e-10, "min reduced eig " + fmt(worst)};
}

}  // namespace

std::vector<SelfTestResult> run_selftests(std::uint64_t seed) {
  RandomStream rng(seed);
  return {
      kernel_equivalence(rng),   random_scaling_recursion(rng), quantile_table(),
      sketch_contraction(rng),   exact_solver(rng),             regularization_floor(rng),
  };
}

}  // namespace aissqp
