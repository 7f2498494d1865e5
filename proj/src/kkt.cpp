#include "aissqp/kkt.hpp"

#include <stdexcept>

#include "aissqp/kernels.hpp"

namespace aissqp {
namespace {

void require_full_row_rank(const Matrix& G) {
  const Matrix gram = G * G.transpose();
  Eigen::LLT<Matrix> llt(gram);
  const double scale = std::max(1.0, gram.diagonal().maxCoeff());
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("constraint Jacobian G is rank deficient");
  }
  const auto L = llt.matrixLLT().diagonal();
  if ((L.array().square() / scale).minCoeff() < 1e-14) {
    throw std::invalid_argument("constraint Jacobian G is rank deficient");
  }
}

}  // namespace

void HessianAccumulator::accumulate(const ProblemSpec& problem, const Vector& x,
                                    const Vector& lambda, const Sample& sample) {
  if (sum_.rows() != problem.d) {
    if (count_ != 0) throw std::invalid_argument("Hessian accumulator dimension mismatch");
    sum_ = Matrix::Zero(problem.d, problem.d);
  }
  if (x.size() != problem.d || lambda.size() != problem.m() || sample.xi_a.size() != problem.d) {
    throw std::invalid_argument("Hessian accumulator dimension mismatch");
  }
  const double w = hessian_weight(problem, x, sample);
  const auto n = static_cast<std::size_t>(problem.d);
  kernels::active().syr(w, sample.xi_a.data(), sum_.data(), n);
  lipschitz_sum_ +=
      hessian_weight_bound(problem.loss) * kernels::active().dot(sample.xi_a.data(), sample.xi_a.data(), n);
  sum_.diagonal().array() += constraint_curvature(lambda);
  ++count_;
}

void HessianAccumulator::average_into(Eigen::Ref<Matrix> out) const {
  if (count_ == 0) {
    out.setIdentity();
  } else {
    out = sum_ / static_cast<double>(count_);
  }
}

Matrix HessianAccumulator::average() const {
  Matrix out(sum_.rows(), sum_.cols());
  average_into(out);
  return out;
}

Matrix null_space_basis(const Matrix& G) {
  const Eigen::Index d = G.cols();
  const Eigen::Index m = G.rows();
  Eigen::HouseholderQR<Matrix> qr(G.transpose());
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  return Q.rightCols(d - m);
}

double regularize_in_place(Eigen::Ref<Matrix> B, const Matrix& G, double gamma_RH) {
  if (B.rows() != B.cols() || G.cols() != B.rows()) {
    throw std::invalid_argument("regularize: dimension mismatch");
  }
  if (G.rows() >= G.cols()) throw std::invalid_argument("regularize: need m < d");
  require_full_row_rank(G);

  // If B - gamma I is PD on the whole space it is PD on Kernel(G) too.
  Matrix shifted = B;
  shifted.diagonal().array() -= gamma_RH;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) return 0.0;

  const Matrix Z = null_space_basis(G);
  const Matrix reduced = Z.transpose() * B * Z;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (lambda_min >= gamma_RH) return 0.0;
  const double delta = gamma_RH - lambda_min;
  B.diagonal().array() += delta;
  return delta;
}

Regularized regularize(const Matrix& avg_H, const Matrix& G, double gamma_RH) {
  Regularized out{avg_H, 0.0};
  out.delta = regularize_in_place(out.B, G, gamma_RH);
  return out;
}

void assemble_into(KktSystem& sys, const Matrix& B, const Matrix& G, const Vector& grad_Lx,
                   const Vector& c, double delta_applied) {
  const int d = static_cast<int>(B.rows());
  const int m = static_cast<int>(G.rows());
  const int n = d + m;
  if (sys.K.rows() != n) {
    sys.K.resize(n, n);
    sys.rhs.resize(n);
  }
  sys.d = d;
  sys.m = m;
  sys.K.topLeftCorner(d, d) = B;
  sys.K.topRightCorner(d, m) = G.transpose();
  sys.K.bottomLeftCorner(m, d) = G;
  sys.K.bottomRightCorner(m, m).setZero();
  sys.rhs.head(d) = -grad_Lx;
  sys.rhs.tail(m) = -c;
  sys.delta_applied = delta_applied;
}

KktSystem assemble(const Matrix& B, const Matrix& G, const Vector& grad_Lx, const Vector& c,
                   double delta_applied) {
  if (B.rows() != B.cols() || G.cols() != B.rows() || grad_Lx.size() != B.rows() ||
      c.size() != G.rows()) {
    throw std::invalid_argument("assemble: dimension mismatch");
  }
  if (!B.isApprox(B.transpose(), 1e-12)) throw std::invalid_argument("assemble: B not symmetric");
  require_full_row_rank(G);
  KktSystem sys;
  assemble_into(sys, B, G, grad_Lx, c, delta_applied);
  Eigen::PartialPivLU<Matrix> lu(sys.K);
  if (!(lu.rcond() > 1e-13)) throw std::invalid_argument("assemble: KKT matrix is singular");
  return sys;
}

}  // namespace aissqp
