#pragma once
// Constrained regression problems: synthetic data, stochastic oracles and
// constraint derivatives.
//
//   min_x E[F(x; xi)]   s.t.  A x = b,  ||x||^2 = R2
//
// with F the squared loss 0.5 (xi_b - xi_a^T x)^2 or the log loss
// log(1 + exp(-xi_b xi_a^T x)). The constraint vector stacks the linear rows
// first and the sphere row last, so the dual has m = m_lin + 1 entries.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <string_view>

#include "aissqp/rng.hpp"

namespace aissqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LossKind { squared, logistic };
enum class DesignKind { identity, toeplitz, equicorr };

std::string_view to_string(LossKind kind) noexcept;
std::string_view to_string(DesignKind kind) noexcept;
LossKind parse_loss_kind(std::string_view text);
DesignKind parse_design_kind(std::string_view text);

/// Covariate design Sigma_a; covariates are drawn from N(0, 5I + Sigma_a).
struct DesignCov {
  DesignKind kind = DesignKind::identity;
  double r = 0.0;  // correlation parameter, must lie in (0,1) unless identity
};

struct ProblemSpec {
  LossKind loss = LossKind::squared;
  int d = 0;
  int m_lin = 0;
  Matrix A;  // m_lin x d
  Vector b;  // m_lin
  double R2 = 0.0;
  Vector x_star;
  DesignCov design;
  Matrix covariate_chol;  // lower Cholesky factor of 5I + Sigma_a

  int m() const noexcept { return m_lin + 1; }
  int n() const noexcept { return d + m(); }
};

struct Sample {
  Vector xi_a;
  double xi_b = 0.0;  // +-1 for logistic loss
};

/// Joint primal-dual point (x, lambda).
struct PrimalDual {
  Vector x;
  Vector lambda;

  Vector stacked() const;
  static PrimalDual split(const Vector& z, int d);
};

struct ConstraintEval {
  Vector c;  // m
  Matrix G;  // m x d
};

/// Numerically stable logistic function 1 / (1 + exp(-z)).
inline double logistic(double z) noexcept {
  const double e = std::exp(-std::abs(z));
  return z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

/// Sigma_a for the given design. Throws std::invalid_argument on bad r or d.
Matrix build_design_matrix(const DesignCov& design, int d);

/// Random problem instance: x* = linspace(0, 1, d), A ~ N(0,1) entries,
/// b = A x*, R2 = ||x*||^2. A is redrawn until [A; 2 x*^T] has full row rank.
ProblemSpec make_problem(LossKind loss, int d, int m_lin, const DesignCov& design,
                         RandomStream& rng);

/// Validates the structural invariants of a (possibly hand-built) problem and
/// fills covariate_chol. Throws std::invalid_argument.
void finalize_problem(ProblemSpec& problem);

Sample sample_data(const ProblemSpec& problem, RandomStream& rng);
void sample_data(const ProblemSpec& problem, RandomStream& rng, Sample& out);

double pointwise_loss(const ProblemSpec& problem, const Vector& x, const Sample& sample);

Vector stochastic_gradient(const ProblemSpec& problem, const Vector& x, const Sample& sample);
void stochastic_gradient(const ProblemSpec& problem, const Vector& x, const Sample& sample,
                         Eigen::Ref<Vector> out);

/// Scalar w with grad^2 F(x; xi) = w * xi_a xi_a^T.
double hessian_weight(const ProblemSpec& problem, const Vector& x, const Sample& sample);

/// Upper bound on hessian_weight over all x and samples: 1 for the squared
/// loss, 1/4 for the log loss.
inline double hessian_weight_bound(LossKind kind) noexcept {
  return kind == LossKind::squared ? 1.0 : 0.25;
}

Matrix stochastic_hessian(const ProblemSpec& problem, const Vector& x, const Sample& sample);

ConstraintEval constraints(const ProblemSpec& problem, const Vector& x);
void constraints(const ProblemSpec& problem, const Vector& x, Eigen::Ref<Vector> c,
                 Eigen::Ref<Matrix> G);

/// sum_j lambda_j grad^2 c_j(x). Linear rows vanish; the sphere row gives
/// 2 lambda_sphere I.
Matrix constraint_hessian_contraction(const ProblemSpec& problem, const Vector& lambda);

/// The scalar s with constraint_hessian_contraction = s I.
inline double constraint_curvature(const Vector& lambda) noexcept {
  return 2.0 * lambda[lambda.size() - 1];
}

/// (x*, lambda*) with lambda* = 0: both models are well specified so
/// grad f(x*) = 0, and full-rank G* forces the multiplier to vanish.
PrimalDual true_solution(const ProblemSpec& problem);

}  // namespace aissqp
