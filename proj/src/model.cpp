#include "aissqp/model.hpp"

#include <stdexcept>
#include <string>

#include "aissqp/kernels.hpp"

namespace aissqp {
namespace {

constexpr int kMaxRankRedraws = 100;

bool has_full_row_rank(const Matrix& J) {
  Eigen::ColPivHouseholderQR<Matrix> qr(J.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == J.rows();
}

Matrix stacked_jacobian(const ProblemSpec& p, const Vector& x) {
  Matrix J(p.m(), p.d);
  if (p.m_lin > 0) J.topRows(p.m_lin) = p.A;
  J.row(p.m_lin) = 2.0 * x.transpose();
  return J;
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::squared ? "squared" : "logistic";
}

std::string_view to_string(DesignKind kind) noexcept {
  switch (kind) {
    case DesignKind::identity: return "identity";
    case DesignKind::toeplitz: return "toeplitz";
    case DesignKind::equicorr: return "equicorr";
  }
  return "identity";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "squared") return LossKind::squared;
  if (text == "logistic") return LossKind::logistic;
  throw std::invalid_argument("unknown loss kind '" + std::string(text) +
                              "' (expected squared|logistic)");
}

DesignKind parse_design_kind(std::string_view text) {
  if (text == "identity") return DesignKind::identity;
  if (text == "toeplitz") return DesignKind::toeplitz;
  if (text == "equicorr") return DesignKind::equicorr;
  throw std::invalid_argument("unknown design '" + std::string(text) +
                              "' (expected identity|toeplitz|equicorr)");
}

Vector PrimalDual::stacked() const {
  Vector z(x.size() + lambda.size());
  z << x, lambda;
  return z;
}

PrimalDual PrimalDual::split(const Vector& z, int d) {
  return PrimalDual{z.head(d), z.tail(z.size() - d)};
}

Matrix build_design_matrix(const DesignCov& design, int d) {
  if (d < 1) throw std::invalid_argument("design dimension must be >= 1");
  if (design.kind == DesignKind::identity) return Matrix::Identity(d, d);
  if (!(design.r > 0.0 && design.r < 1.0)) {
    throw std::invalid_argument("design correlation r must lie in (0,1), got " +
                                std::to_string(design.r));
  }
  Matrix S(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (i == j) {
        S(i, j) = 1.0;
      } else if (design.kind == DesignKind::toeplitz) {
        S(i, j) = std::pow(design.r, std::abs(i - j));
      } else {
        S(i, j) = design.r;
      }
    }
  }
  return S;
}

void finalize_problem(ProblemSpec& p) {
  if (p.d < 2) throw std::invalid_argument("problem dimension d must be >= 2");
  if (p.m_lin < 0 || p.m() >= p.d) {
    throw std::invalid_argument("constraint count m = m_lin + 1 must be < d");
  }
  if (p.x_star.size() != p.d || p.A.rows() != p.m_lin || p.A.cols() != p.d ||
      p.b.size() != p.m_lin) {
    throw std::invalid_argument("problem data dimensions are inconsistent");
  }
  if (p.R2 < 0.0) throw std::invalid_argument("sphere radius squared must be nonnegative");
  if (!has_full_row_rank(stacked_jacobian(p, p.x_star))) {
    throw std::invalid_argument("constraint Jacobian at x* is rank deficient");
  }
  Matrix cov = 5.0 * Matrix::Identity(p.d, p.d) + build_design_matrix(p.design, p.d);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariate covariance is not PD");
  p.covariate_chol = llt.matrixL();
}

ProblemSpec make_problem(LossKind loss, int d, int m_lin, const DesignCov& design,
                         RandomStream& rng) {
  if (d < 2) throw std::invalid_argument("problem dimension d must be >= 2");
  if (m_lin < 0 || m_lin + 1 >= d) {
    throw std::invalid_argument("need m_lin + 1 < d (m_lin = " + std::to_string(m_lin) +
                                ", d = " + std::to_string(d) + ")");
  }
  build_design_matrix(design, d);  // validates r

  ProblemSpec p;
  p.loss = loss;
  p.d = d;
  p.m_lin = m_lin;
  p.design = design;
  p.x_star = Vector::LinSpaced(d, 0.0, 1.0);
  p.R2 = p.x_star.squaredNorm();

  for (int attempt = 0; attempt < kMaxRankRedraws; ++attempt) {
    p.A.resize(m_lin, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < m_lin; ++i) p.A(i, j) = rng.normal();
    p.b = p.A * p.x_star;
    if (has_full_row_rank(stacked_jacobian(p, p.x_star))) {
      finalize_problem(p);
      return p;
    }
  }
  throw std::runtime_error("could not draw a full-rank constraint Jacobian after " +
                           std::to_string(kMaxRankRedraws) + " attempts");
}

void sample_data(const ProblemSpec& p, RandomStream& rng, Sample& out) {
  Vector& a = out.xi_a;
  a.resize(p.d);
  for (int i = 0; i < p.d; ++i) a[i] = rng.normal();
  // In-place a <- L a; row i only reads a[0..i], so sweep bottom-up.
  const Matrix& L = p.covariate_chol;
  for (int i = p.d - 1; i >= 0; --i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += L(i, j) * a[j];
    a[i] = acc;
  }
  const double margin = kernels::active().dot(a.data(), p.x_star.data(), static_cast<std::size_t>(p.d));
  if (p.loss == LossKind::squared) {
    out.xi_b = margin + rng.normal();
  } else {
    out.xi_b = rng.uniform() < logistic(margin) ? 1.0 : -1.0;
  }
}

Sample sample_data(const ProblemSpec& p, RandomStream& rng) {
  Sample s;
  sample_data(p, rng, s);
  return s;
}

double pointwise_loss(const ProblemSpec& p, const Vector& x, const Sample& s) {
  const double margin = s.xi_a.dot(x);
  if (p.loss == LossKind::squared) {
    const double r = s.xi_b - margin;
    return 0.5 * r * r;
  }
  // log(1 + exp(-y m)) without overflow.
  const double z = -s.xi_b * margin;
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void stochastic_gradient(const ProblemSpec& p, const Vector& x, const Sample& s,
                         Eigen::Ref<Vector> out) {
  const double margin = kernels::active().dot(s.xi_a.data(), x.data(), static_cast<std::size_t>(x.size()));
  double scale;
  if (p.loss == LossKind::squared) {
    scale = -(s.xi_b - margin);
  } else {
    scale = -s.xi_b * logistic(-s.xi_b * margin);
  }
  out = scale * s.xi_a;
}

Vector stochastic_gradient(const ProblemSpec& p, const Vector& x, const Sample& s) {
  Vector g(p.d);
  stochastic_gradient(p, x, s, g);
  return g;
}

double hessian_weight(const ProblemSpec& p, const Vector& x, const Sample& s) {
  if (p.loss == LossKind::squared) return 1.0;
  const double sig = logistic(s.xi_a.dot(x));
  return sig * (1.0 - sig);
}

Matrix stochastic_hessian(const ProblemSpec& p, const Vector& x, const Sample& s) {
  return hessian_weight(p, x, s) * (s.xi_a * s.xi_a.transpose());
}

void constraints(const ProblemSpec& p, const Vector& x, Eigen::Ref<Vector> c,
                 Eigen::Ref<Matrix> G) {
  if (p.m_lin > 0) {
    c.head(p.m_lin).noalias() = p.A * x;
    c.head(p.m_lin) -= p.b;
    G.topRows(p.m_lin) = p.A;
  }
  c[p.m_lin] = x.squaredNorm() - p.R2;
  G.row(p.m_lin) = 2.0 * x.transpose();
}

ConstraintEval constraints(const ProblemSpec& p, const Vector& x) {
  ConstraintEval e{Vector(p.m()), Matrix(p.m(), p.d)};
  constraints(p, x, e.c, e.G);
  return e;
}

Matrix constraint_hessian_contraction(const ProblemSpec& p, const Vector& lambda) {
  if (lambda.size() != p.m()) throw std::invalid_argument("dual dimension mismatch");
  return constraint_curvature(lambda) * Matrix::Identity(p.d, p.d);
}

PrimalDual true_solution(const ProblemSpec& p) {
  return PrimalDual{p.x_star, Vector::Zero(p.m())};
}

}  // namespace aissqp
