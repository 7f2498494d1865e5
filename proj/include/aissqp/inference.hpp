#pragma once
// Online inference for averaged iterates.
//
// RandomScalingState keeps the running mean s_bar_t = (1/t) sum_{i<t} s_i of
// a stream together with
//
//   P_t = sum_{i=1}^t i^2 s_bar_i s_bar_i^T,   Q_t = sum_{i=1}^t i^2 s_bar_i,
//
// from which the random scaling matrix
//
//   V_t = (1/t^2) sum_{i=1}^t i^2 (s_bar_i - s_bar_t)(s_bar_i - s_bar_t)^T
//
// is recovered in O(n^2) per update and O(n^2) per query. The studentized
// statistic sqrt(t) w^T(s_bar_t - s*) / sqrt(w^T V_t w) has a parameter-free
// limit whose quantiles are tabulated in random_scaling_quantile().
//
// PluginState and BatchMeansState are the covariance-estimation baselines.

#include <cstdint>
#include <optional>
#include <vector>

#include "aissqp/model.hpp"

namespace aissqp {

struct ConfidenceInterval {
  double center = 0.0;
  double half_width = 0.0;
  double level = 0.95;
  bool available = true;  // false when the estimator has too little data
  bool clamped = false;   // quadratic form was negative from roundoff

  double lower() const noexcept { return center - half_width; }
  double upper() const noexcept { return center + half_width; }
  double length() const noexcept { return 2.0 * half_width; }
  bool contains(double value) const noexcept {
    return available && lower() <= value && value <= upper();
  }
};

class RandomScalingState {
 public:
  RandomScalingState() = default;
  explicit RandomScalingState(int n);

  /// Feeds the next stream element s_t (t = count() before the call).
  void update(const Vector& s);

  std::int64_t count() const noexcept { return t_; }
  int dim() const noexcept { return static_cast<int>(origin_.size()); }

  /// s_bar_t. Requires count() >= 1.
  Vector mean() const;

  /// V_t, symmetrized. Requires count() >= 1.
  Matrix materialize() const;

  /// w^T V_t w without forming V_t.
  double quadratic_form(const Vector& w) const;

 private:
  // The stream is stored relative to its first element; V is invariant to
  // this shift and the cancellation in P - Q s^T - s Q^T + ... shrinks.
  Vector origin_;
  Vector mean_;  // centered s_bar_t
  Matrix P_, P_comp_;
  Vector Q_, Q_comp_;
  std::int64_t t_ = 0;
};

/// Free-function spellings of the accumulator operations.
inline void rs_update(RandomScalingState& state, const Vector& s) { state.update(s); }
inline Matrix rs_materialize(const RandomScalingState& state) { return state.materialize(); }

/// Quantile U_p of W(1) / sqrt(int_0^1 (W(r) - r W(1))^2 dr), tabulated at
/// 0.90, 0.95, 0.975 and 0.99 and linearly interpolated in between. Throws
/// std::invalid_argument outside [0.90, 0.99].
double random_scaling_quantile(double p);

/// Standard normal quantile.
double normal_quantile(double p);

/// center = w^T s_bar_t, half width U_{1-p/2} sqrt(w^T V_t w / t), p = 1 - level.
ConfidenceInterval rs_confint(const RandomScalingState& state, const Vector& w, double level);

/// Sandwich plug-in estimator of K^-1 blockdiag(cov(grad F), 0) K^-1 built from
/// the trajectory's stochastic Lagrangian gradients and the latest K_t.
class PluginState {
 public:
  PluginState() = default;
  PluginState(int d, int m);

  void update(const Vector& grad_Lx, const Matrix& K);

  std::int64_t count() const noexcept { return count_; }
  const Matrix& grad_outer_sum() const noexcept { return grad_outer_sum_; }
  const Matrix& last_K() const noexcept { return last_K_; }

  /// Xi_hat; throws std::runtime_error if K is singular or no data was seen.
  Matrix covariance() const;

 private:
  Matrix grad_outer_sum_;
  Matrix last_K_;
  int d_ = 0;
  int m_ = 0;
  std::int64_t count_ = 0;
};

inline void plugin_update(PluginState& state, const Vector& grad_Lx, const Matrix& K) {
  state.update(grad_Lx, K);
}
inline Matrix plugin_cov(const PluginState& state) { return state.covariance(); }

enum class PluginScaling {
  averaged,  // sqrt(w^T Xi w / t)
  last,      // sqrt(beta_t w^T Xi w)
};

/// Normal-theory interval around w^T center_vec. `beta_t` is only read for
/// PluginScaling::last.
ConfidenceInterval plugin_confint(const PluginState& state, const Vector& center_vec,
                                  const Vector& w, double level, PluginScaling scaling,
                                  double beta_t = 0.0);

/// Same, for a precomputed Xi_hat and sample count t.
ConfidenceInterval plugin_confint(const Matrix& xi_hat, std::int64_t t, const Vector& center_vec,
                                  const Vector& w, double level, PluginScaling scaling,
                                  double beta_t = 0.0);

/// Non-overlapping batch means with batch starts a_k = floor(k^{2/(1-beta)}),
/// k = 1, 2, ...; stream elements before a_1 are not batched.
class BatchMeansState {
 public:
  struct Batch {
    Vector mean;
    std::int64_t length = 0;
  };

  BatchMeansState() = default;
  explicit BatchMeansState(int n, double beta_exp = 0.501);

  void update(const Vector& s);

  /// a_k for this schedule.
  std::int64_t batch_start(std::int64_t k) const;

  std::int64_t count() const noexcept { return t_; }
  const std::vector<Batch>& completed() const noexcept { return completed_; }
  double beta_exp() const noexcept { return beta_exp_; }

  /// (1/M) sum_k n_k (b_k - s_bar)(b_k - s_bar)^T over completed batches, or
  /// nullopt with fewer than two.
  std::optional<Matrix> covariance(const Vector& s_bar) const;

 private:
  double beta_exp_ = 0.501;
  std::vector<Batch> completed_;
  Vector current_sum_;
  std::int64_t current_len_ = 0;
  std::int64_t current_k_ = 0;  // index of the open batch, 0 before a_1
  std::int64_t next_start_ = 1;
  std::int64_t t_ = 0;
};

inline void bm_update(BatchMeansState& state, const Vector& s) { state.update(s); }

/// half width z_{1-p/2} sqrt(w^T Sigma_BM w / t); unavailable with < 2 batches.
ConfidenceInterval bm_confint(const BatchMeansState& state, const Vector& s_bar, const Vector& w,
                              double level);

/// (1/d, ..., 1/d, 0, ..., 0): the coordinate-wise average of x.
Vector coordinate_average_weights(int d, int m);

/// ||proj_{rowspace(G)} w_x|| / ||w_x||, in [0, 1]. Values near 1 mean w lies
/// along a constraint normal, where the limiting variance vanishes.
double normal_alignment(const Vector& w, const Matrix& G);

}  // namespace aissqp
