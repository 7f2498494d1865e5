#include "aissqp/inference.hpp"

#include <array>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aissqp/kernels.hpp"

namespace aissqp {
namespace {

struct QuantilePoint {
  double p;
  double value;
};

// Quantiles of W(1) / sqrt(int (W(r) - r W(1))^2 dr).
constexpr std::array<QuantilePoint, 4> kRandomScalingTable{{
    {0.90, 3.875},
    {0.95, 5.323},
    {0.975, 6.747},
    {0.99, 8.613},
}};

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("confidence level must lie in (0,1)");
  }
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

// ---------------------------------------------------------------------------
// Random scaling

RandomScalingState::RandomScalingState(int n)
    : origin_(Vector::Zero(n)),
      mean_(Vector::Zero(n)),
      P_(Matrix::Zero(n, n)),
      P_comp_(Matrix::Zero(n, n)),
      Q_(Vector::Zero(n)),
      Q_comp_(Vector::Zero(n)) {}

void RandomScalingState::update(const Vector& s) {
  if (origin_.size() == 0 && t_ == 0) *this = RandomScalingState(static_cast<int>(s.size()));
  if (s.size() != origin_.size()) throw std::invalid_argument("random scaling: dimension mismatch");
  if (t_ == 0) origin_ = s;

  const double t = static_cast<double>(t_);
  const double t1 = t + 1.0;
  // s_bar_{t+1} = s_t / (t+1) + t s_bar_t / (t+1), on the centered stream
  mean_ = (s - origin_) / t1 + (t / t1) * mean_;
  const double w = t1 * t1;
  const auto& kt = kernels::active();
  const auto n = static_cast<std::size_t>(mean_.size());
  kt.syr_compensated(w, mean_.data(), P_.data(), P_comp_.data(), n);
  kt.axpy_compensated(w, mean_.data(), Q_.data(), Q_comp_.data(), n);
  ++t_;
}

Vector RandomScalingState::mean() const {
  if (t_ == 0) throw std::logic_error("random scaling: no data");
  return origin_ + mean_;
}

Matrix RandomScalingState::materialize() const {
  if (t_ == 0) throw std::logic_error("random scaling: no data");
  const double t = static_cast<double>(t_);
  const double sum_i2 = t * (t + 1.0) * (2.0 * t + 1.0) / 6.0;
  const Matrix P = P_ - P_comp_;
  const Vector Q = Q_ - Q_comp_;
  Matrix V = P - Q * mean_.transpose() - mean_ * Q.transpose() +
             sum_i2 * (mean_ * mean_.transpose());
  V /= t * t;
  return 0.5 * (V + V.transpose());
}

double RandomScalingState::quadratic_form(const Vector& w) const {
  if (t_ == 0) throw std::logic_error("random scaling: no data");
  if (w.size() != mean_.size()) throw std::invalid_argument("random scaling: weight dimension");
  const double t = static_cast<double>(t_);
  const double sum_i2 = t * (t + 1.0) * (2.0 * t + 1.0) / 6.0;
  const Matrix P = P_ - P_comp_;
  const double wPw = w.dot(P * w);
  const double wQ = w.dot(Q_ - Q_comp_);
  const double ws = w.dot(mean_);
  return (wPw - 2.0 * wQ * ws + sum_i2 * ws * ws) / (t * t);
}

double random_scaling_quantile(double p) {
  const auto& tab = kRandomScalingTable;
  if (!(p >= tab.front().p && p <= tab.back().p)) {
    throw std::invalid_argument("random scaling quantile only tabulated on [0.90, 0.99], got " +
                                std::to_string(p));
  }
  for (std::size_t k = 0; k < tab.size(); ++k) {
    if (p == tab[k].p) return tab[k].value;
  }
  for (std::size_t k = 0; k + 1 < tab.size(); ++k) {
    if (p < tab[k + 1].p) {
      const double f = (p - tab[k].p) / (tab[k + 1].p - tab[k].p);
      return tab[k].value + f * (tab[k + 1].value - tab[k].value);
    }
  }
  return tab.back().value;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal quantile needs p in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

ConfidenceInterval rs_confint(const RandomScalingState& state, const Vector& w, double level) {
  check_level(level);
  ConfidenceInterval ci;
  ci.level = level;
  const double u = random_scaling_quantile(1.0 - (1.0 - level) / 2.0);
  if (state.count() < 2) {
    if (state.count() == 1) ci.center = w.dot(state.mean());
    ci.available = false;
    return ci;
  }
  ci.center = w.dot(state.mean());
  double q = state.quadratic_form(w);
  if (q < 0.0) {
    ci.clamped = true;
    q = 0.0;
  }
  ci.half_width = u * std::sqrt(q / static_cast<double>(state.count()));
  return ci;
}

// ---------------------------------------------------------------------------
// Plug-in

PluginState::PluginState(int d, int m)
    : grad_outer_sum_(Matrix::Zero(d, d)), last_K_(Matrix::Zero(d + m, d + m)), d_(d), m_(m) {}

void PluginState::update(const Vector& grad_Lx, const Matrix& K) {
  if (grad_Lx.size() != d_ || K.rows() != d_ + m_ || K.cols() != d_ + m_) {
    throw std::invalid_argument("plug-in: dimension mismatch");
  }
  kernels::syr(1.0, as_span(grad_Lx), {grad_outer_sum_.data(), static_cast<std::size_t>(grad_outer_sum_.size())});
  last_K_ = K;
  ++count_;
}

Matrix PluginState::covariance() const {
  if (count_ == 0) throw std::runtime_error("plug-in: no data");
  const int n = d_ + m_;
  Eigen::PartialPivLU<Matrix> lu(last_K_);
  if (!(lu.rcond() > 1e-14)) throw std::runtime_error("plug-in: K is singular");
  // Columns 0..d-1 of K^-1; K symmetric so Xi = X Omega X^T.
  const Matrix X = lu.solve(Matrix::Identity(n, n).leftCols(d_));
  const Matrix omega = grad_outer_sum_ / static_cast<double>(count_);
  Matrix xi = X * omega * X.transpose();
  return 0.5 * (xi + xi.transpose());
}

ConfidenceInterval plugin_confint(const Matrix& xi_hat, std::int64_t t, const Vector& center_vec,
                                  const Vector& w, double level, PluginScaling scaling,
                                  double beta_t) {
  check_level(level);
  ConfidenceInterval ci;
  ci.level = level;
  ci.center = w.dot(center_vec);
  double q = w.dot(xi_hat * w);
  if (q < 0.0) {
    ci.clamped = true;
    q = 0.0;
  }
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  if (scaling == PluginScaling::averaged) {
    if (t < 1) {
      ci.available = false;
      return ci;
    }
    ci.half_width = z * std::sqrt(q / static_cast<double>(t));
  } else {
    if (!(beta_t > 0.0)) throw std::invalid_argument("plug-in: last-iterate scaling needs beta_t > 0");
    ci.half_width = z * std::sqrt(beta_t * q);
  }
  return ci;
}

ConfidenceInterval plugin_confint(const PluginState& state, const Vector& center_vec,
                                  const Vector& w, double level, PluginScaling scaling,
                                  double beta_t) {
  return plugin_confint(state.covariance(), state.count(), center_vec, w, level, scaling, beta_t);
}

// ---------------------------------------------------------------------------
// Batch means

BatchMeansState::BatchMeansState(int n, double beta_exp)
    : beta_exp_(beta_exp), current_sum_(Vector::Zero(n)) {
  if (!(beta_exp > 0.0 && beta_exp < 1.0)) {
    throw std::invalid_argument("batch-means exponent must lie in (0,1)");
  }
  next_start_ = batch_start(1);
}

std::int64_t BatchMeansState::batch_start(std::int64_t k) const {
  return static_cast<std::int64_t>(
      std::floor(std::pow(static_cast<double>(k), 2.0 / (1.0 - beta_exp_))));
}

void BatchMeansState::update(const Vector& s) {
  if (current_sum_.size() == 0 && t_ == 0) *this = BatchMeansState(static_cast<int>(s.size()), beta_exp_);
  if (s.size() != current_sum_.size()) throw std::invalid_argument("batch means: dimension mismatch");
  while (t_ >= next_start_) {
    if (current_k_ >= 1 && current_len_ > 0) {
      completed_.push_back({current_sum_ / static_cast<double>(current_len_), current_len_});
    }
    current_sum_.setZero();
    current_len_ = 0;
    ++current_k_;
    next_start_ = batch_start(current_k_ + 1);
  }
  if (current_k_ >= 1) {
    current_sum_ += s;
    ++current_len_;
  }
  ++t_;
}

std::optional<Matrix> BatchMeansState::covariance(const Vector& s_bar) const {
  if (completed_.size() < 2) return std::nullopt;
  const auto n = s_bar.size();
  Matrix sigma = Matrix::Zero(n, n);
  for (const auto& b : completed_) {
    const Vector diff = b.mean - s_bar;
    sigma.noalias() += static_cast<double>(b.length) * (diff * diff.transpose());
  }
  sigma /= static_cast<double>(completed_.size());
  return 0.5 * (sigma + sigma.transpose());
}

ConfidenceInterval bm_confint(const BatchMeansState& state, const Vector& s_bar, const Vector& w,
                              double level) {
  check_level(level);
  ConfidenceInterval ci;
  ci.level = level;
  ci.center = w.dot(s_bar);
  if (state.completed().size() < 2) {
    ci.available = false;
    return ci;
  }
  double q = 0.0;
  for (const auto& b : state.completed()) {
    const double proj = w.dot(b.mean - s_bar);
    q += static_cast<double>(b.length) * proj * proj;
  }
  q /= static_cast<double>(state.completed().size());
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  ci.half_width = z * std::sqrt(q / static_cast<double>(state.count()));
  return ci;
}

Vector coordinate_average_weights(int d, int m) {
  Vector w = Vector::Zero(d + m);
  w.head(d).setConstant(1.0 / d);
  return w;
}

double normal_alignment(const Vector& w, const Matrix& G) {
  const Vector wx = w.head(G.cols());
  const double norm = wx.norm();
  if (norm == 0.0) return 0.0;
  // Projection onto rowspace(G) = G^T (G G^T)^-1 G w_x.
  const Vector coeff = (G * G.transpose()).ldlt().solve(G * wx);
  return (G.transpose() * coeff).norm() / norm;
}

}  // namespace aissqp
