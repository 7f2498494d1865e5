#include "aissqp/ssqp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aissqp {

void StepSchedule::validate() const {
  if (!(c_beta > 0.0)) throw std::invalid_argument("step schedule: c_beta must be > 0");
  if (!(c_chi >= 0.0)) throw std::invalid_argument("step schedule: c_chi must be >= 0");
  const bool beta_ok = allow_unit_beta ? (beta_exp > 0.5 && beta_exp <= 1.0)
                                       : (beta_exp > 0.5 && beta_exp < 1.0);
  if (!beta_ok) throw std::invalid_argument("step schedule: beta exponent must lie in (0.5, 1)");
  if (!(chi_exp > beta_exp + 0.5)) {
    throw std::invalid_argument("step schedule: need chi exponent > beta exponent + 0.5");
  }
}

Stepsizes stepsizes(const StepSchedule& sched, std::int64_t t) {
  const double base = static_cast<double>(t) + 1.0;
  const double beta = sched.c_beta / std::pow(base, sched.beta_exp);
  const double chi = sched.c_chi / std::pow(base, sched.chi_exp);
  return {beta, beta + chi};
}

double draw_stepsize(const StepSchedule& sched, std::int64_t t, RandomStream& rng) {
  const Stepsizes s = stepsizes(sched, t);
  const double alpha = rng.uniform(s.beta, s.eta);
  // [lo, hi) sampling can round up to hi when hi - lo is tiny.
  return std::min(std::max(alpha, s.beta), s.eta);
}

SolverState SolverState::initial(const ProblemSpec& problem, const InferenceConfig& inference) {
  const int d = problem.d;
  const int m = problem.m();
  SolverState s;
  s.iterate = PrimalDual{Vector::Ones(d), Vector::Ones(m)};
  s.sum_iterates = Vector::Zero(d + m);
  s.hess_acc = HessianAccumulator(d);
  if (inference.random_scaling) s.rs.emplace(d + m);
  if (inference.plugin) s.plugin.emplace(d, m);
  if (inference.batch_means) s.bm.emplace(d + m, inference.bm_beta);
  s.sample.xi_a.resize(d);
  s.grad.resize(d);
  s.grad_Lx.resize(d);
  s.c.resize(m);
  s.G.resize(m, d);
  s.B.resize(d, d);
  return s;
}

Vector SolverState::averaged() const {
  if (averaged_count < 1) throw std::logic_error("no averaged iterate yet");
  return sum_iterates / static_cast<double>(averaged_count);
}

StepInfo step(SolverState& state, const ProblemSpec& problem, const SolverOptions& options,
              RandomStream& rng) {
  const int d = problem.d;
  PrimalDual& it = state.iterate;

  // Sample and first-order quantities at (x_t, lambda_t).
  sample_data(problem, rng, state.sample);
  stochastic_gradient(problem, it.x, state.sample, state.grad);
  constraints(problem, it.x, state.c, state.G);
  state.grad_Lx.noalias() = state.grad + state.G.transpose() * it.lambda;

  // B_t averages samples 0..t-1 only.
  state.hess_acc.average_into(state.B);
  const Stepsizes bounds = stepsizes(options.schedule, state.t);
  const double curvature_floor = std::max(
      options.gamma_RH, options.stability_floor * bounds.beta * state.hess_acc.gradient_lipschitz());
  const double delta = regularize_in_place(state.B, state.G, curvature_floor);
  assemble_into(state.system, state.B, state.G, state.grad_Lx, state.c, delta);

  NewtonDirection dir = solve(state.system, options.sketch, rng);

  StepInfo info;
  info.t = state.t;
  info.beta = bounds.beta;
  info.eta = bounds.eta;
  info.alpha = draw_stepsize(options.schedule, state.t, rng);
  info.delta = delta;
  info.flops = dir.flops_used;

  // Step t's sample enters the Hessian average used from step t+1 on.
  state.hess_acc.accumulate(problem, it.x, it.lambda, state.sample);

  if (state.plugin) state.plugin->update(state.grad_Lx, state.system.K);
  if (state.t > 0 || options.include_initial) {
    const Vector s = it.stacked();
    state.sum_iterates += s;
    ++state.averaged_count;
    if (state.rs) state.rs->update(s);
    if (state.bm) state.bm->update(s);
  }

  it.x += info.alpha * dir.z.head(d);
  it.lambda += info.alpha * dir.z.tail(problem.m());
  state.flop_total += dir.flops_used;
  ++state.t;

  const double size = std::max(it.x.lpNorm<Eigen::Infinity>(), it.lambda.lpNorm<Eigen::Infinity>());
  if (!std::isfinite(size) || size > options.divergence_threshold) state.diverged = true;
  return info;
}

SolverRun run(const ProblemSpec& problem, const SolverOptions& options, std::int64_t n_iters,
              std::uint64_t seed, const InferenceConfig& inference, const StepObserver& observer) {
  options.sketch.validate();
  options.schedule.validate();
  if (!(options.gamma_RH > 0.0)) throw std::invalid_argument("gamma_RH must be > 0");
  if (!(options.stability_floor >= 0.0)) {
    throw std::invalid_argument("stability_floor must be >= 0");
  }
  if (n_iters < 0) throw std::invalid_argument("iteration count must be >= 0");

  RandomStream rng(seed);
  SolverState state = SolverState::initial(problem, inference);
  SolverRun out;
  out.seed = seed;

  try {
    while (state.t < n_iters && !state.diverged) {
      const StepInfo info = step(state, problem, options, rng);
      if (observer) observer(state, info);
    }
  } catch (const std::exception& e) {
    state.diverged = true;
    out.failure = e.what();
  }
  if (state.diverged && out.failure.empty()) out.failure = "iterate diverged";

  out.iterations = state.t;
  out.final_iterate = state.iterate;
  if (state.averaged_count > 0) out.averaged = state.averaged();
  out.rs = std::move(state.rs);
  out.plugin = std::move(state.plugin);
  out.bm = std::move(state.bm);
  out.beta_last = stepsizes(options.schedule, state.t).beta;
  out.flops_total = state.flop_total;
  out.diverged = state.diverged;
  return out;
}

}  // namespace aissqp
