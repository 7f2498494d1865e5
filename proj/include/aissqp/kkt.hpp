#pragma once
// Running-average Lagrangian Hessian, null-space regularization, and assembly
// of the saddle-point Newton system
//
//   [ B  G^T ] [dx]      [ grad_x L ]
//   [ G   0  ] [dl]  = - [    c     ]

#include <cstdint>

#include "aissqp/model.hpp"

namespace aissqp {

inline constexpr double kDefaultGammaRH = 1e-3;

/// Sum of stochastic Lagrangian Hessians grad^2_x L_i over completed steps.
class HessianAccumulator {
 public:
  HessianAccumulator() = default;
  explicit HessianAccumulator(int d) : sum_(Matrix::Zero(d, d)) {}

  /// Adds grad^2 F(x; sample) + sum_j lambda_j grad^2 c_j(x). The caller
  /// must read average() for step t before accumulating step t's sample.
  void accumulate(const ProblemSpec& problem, const Vector& x, const Vector& lambda,
                  const Sample& sample);

  /// sum / count, or the identity when nothing has been accumulated yet.
  Matrix average() const;
  void average_into(Eigen::Ref<Matrix> out) const;

  const Matrix& sum() const noexcept { return sum_; }
  std::int64_t count() const noexcept { return count_; }

  /// Mean of hessian_weight_bound * ||xi_a||^2 over the accumulated samples:
  /// an estimate of the Lipschitz constant of a single stochastic gradient.
  /// d (the trace of the identity start) when nothing has been accumulated.
  double gradient_lipschitz() const noexcept {
    return count_ == 0 ? static_cast<double>(sum_.rows())
                       : lipschitz_sum_ / static_cast<double>(count_);
  }

 private:
  Matrix sum_;
  double lipschitz_sum_ = 0.0;
  std::int64_t count_ = 0;
};

struct Regularized {
  Matrix B;
  double delta = 0.0;
};

/// B = H + delta I with the smallest delta >= 0 such that Z^T B Z >= gamma I,
/// Z an orthonormal basis of Kernel(G). Throws std::invalid_argument when G
/// is rank deficient.
Regularized regularize(const Matrix& avg_H, const Matrix& G, double gamma_RH = kDefaultGammaRH);

/// In-place variant: B holds the average on entry and the regularized matrix
/// on return. Returns delta.
double regularize_in_place(Eigen::Ref<Matrix> B, const Matrix& G, double gamma_RH);

/// Orthonormal basis of Kernel(G) (d x (d - m)).
Matrix null_space_basis(const Matrix& G);

struct KktSystem {
  Matrix K;    // (d+m) x (d+m)
  Vector rhs;  // -(grad_x L; c)
  double delta_applied = 0.0;
  int d = 0;
  int m = 0;

  int n() const noexcept { return d + m; }
};

/// K = [[B, G^T], [G, 0]], rhs = -(grad_Lx; c). Throws std::invalid_argument on
/// dimension mismatch or rank-deficient G.
KktSystem assemble(const Matrix& B, const Matrix& G, const Vector& grad_Lx, const Vector& c,
                   double delta_applied = 0.0);

/// Writes into an existing system without reallocating; no rank check.
void assemble_into(KktSystem& sys, const Matrix& B, const Matrix& G, const Vector& grad_Lx,
                   const Vector& c, double delta_applied);

}  // namespace aissqp
