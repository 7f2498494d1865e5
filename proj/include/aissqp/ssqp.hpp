#pragma once
// Adaptive inexact stochastic SQP driver.
//
// Each step draws one sample, builds the Newton system from the averaged
// Lagrangian Hessian of the *previous* samples, solves it exactly or with a
// sketching solver, and moves along the direction with a random stepsize
// alpha_t ~ Uniform[beta_t, beta_t + chi_t]. The iterate before the move is
// fed to the running averages and the online inference accumulators.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "aissqp/inference.hpp"
#include "aissqp/kkt.hpp"
#include "aissqp/sketch.hpp"

namespace aissqp {

/// beta_t = c_beta / (t+1)^beta_exp, chi_t = c_chi / (t+1)^chi_exp.
struct StepSchedule {
  double c_beta = 1.0;
  double beta_exp = 0.501;
  double c_chi = 1.0;
  double chi_exp = 1.002;  // chi_t = beta_t^2 at the defaults
  bool allow_unit_beta = false;

  /// Throws std::invalid_argument unless beta_exp in (0.5, 1) (or (0.5, 1]
  /// with allow_unit_beta), chi_exp > beta_exp + 0.5, c_beta > 0, c_chi >= 0.
  void validate() const;
};

struct Stepsizes {
  double beta = 0.0;
  double eta = 0.0;
};

Stepsizes stepsizes(const StepSchedule& sched, std::int64_t t);

/// alpha_t ~ Uniform[beta_t, eta_t].
double draw_stepsize(const StepSchedule& sched, std::int64_t t, RandomStream& rng);

inline constexpr double kDefaultStabilityFloor = 1.0;

struct SolverOptions {
  SketchConfig sketch = SketchConfig::exact();
  StepSchedule schedule;
  double gamma_RH = kDefaultGammaRH;
  // The reduced Hessian is floored at max(gamma_RH, stability_floor * beta_t *
  // L_t), L_t the running estimate of the per-sample gradient Lipschitz
  // constant. While few samples have been averaged, B_t is rank deficient and
  // a 1e-3 floor lets the step along an unseen direction grow by 1e3; this
  // caps it at a gradient step of length ~ 1/L_t. The floor decays with beta_t
  // and stops binding once it falls below the true reduced curvature. Zero
  // disables it.
  double stability_floor = kDefaultStabilityFloor;
  bool include_initial = true;  // average over i = 0..t-1 rather than 1..t-1
  double divergence_threshold = 1e8;
};

struct InferenceConfig {
  bool random_scaling = true;
  bool plugin = true;
  bool batch_means = true;
  double bm_beta = 0.501;
};

struct SolverState {
  PrimalDual iterate;
  Vector sum_iterates;
  std::int64_t averaged_count = 0;
  HessianAccumulator hess_acc;
  std::int64_t t = 0;
  std::uint64_t flop_total = 0;
  bool diverged = false;

  std::optional<RandomScalingState> rs;
  std::optional<PluginState> plugin;
  std::optional<BatchMeansState> bm;

  // Per-step workspace. `system` keeps the last assembled K_t and rhs.
  Sample sample;
  Vector grad;
  Vector grad_Lx;
  Vector c;
  Matrix G;
  Matrix B;
  KktSystem system;

  /// All-ones start with accumulators sized for the problem.
  static SolverState initial(const ProblemSpec& problem, const InferenceConfig& inference);

  /// sum_iterates / averaged_count. Requires averaged_count >= 1.
  Vector averaged() const;
};

struct StepInfo {
  std::int64_t t = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  std::uint64_t flops = 0;
};

/// Advances the state by one iteration. Throws std::runtime_error on a
/// singular KKT system; sets state.diverged on a non-finite or exploding
/// iterate.
StepInfo step(SolverState& state, const ProblemSpec& problem, const SolverOptions& options,
              RandomStream& rng);

struct SolverRun {
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  PrimalDual final_iterate;
  std::optional<Vector> averaged;  // nullopt when no iterate was averaged
  std::optional<RandomScalingState> rs;
  std::optional<PluginState> plugin;
  std::optional<BatchMeansState> bm;
  double beta_last = 0.0;  // beta_t at the final iterate's index
  std::uint64_t flops_total = 0;
  bool diverged = false;
  std::string failure;
};

using StepObserver = std::function<void(const SolverState&, const StepInfo&)>;

/// n_iters steps from the all-ones start with RandomStream(seed). Failures are
/// reported through SolverRun::diverged rather than thrown.
SolverRun run(const ProblemSpec& problem, const SolverOptions& options, std::int64_t n_iters,
              std::uint64_t seed, const InferenceConfig& inference = {},
              const StepObserver& observer = {});

}  // namespace aissqp
