#pragma once
// Replicated experiments: every replication runs one solver trajectory and
// builds all requested intervals from it; aggregates report MAE, coverage,
// interval length and flops per iteration.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aissqp/ssqp.hpp"

namespace aissqp::bench {

enum class Method { AveRS, AvePlugIn, AveBM, LastPlugIn };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view text);
std::vector<Method> parse_methods(std::string_view comma_list);
const std::vector<Method>& all_methods();

enum class OutputFormat { csv, json };
OutputFormat parse_format(std::string_view text);

struct ExperimentConfig {
  LossKind loss = LossKind::squared;
  int d = 5;
  std::optional<int> constraints;  // total m; defaults to 1 for d = 5, else 3
  DesignCov design;
  SketchConfig sketch = SketchConfig::exact();
  std::int64_t n_iters = 100000;
  int n_reps = 200;
  std::uint64_t base_seed = 1;
  double level = 0.95;
  std::vector<Method> methods = all_methods();
  std::optional<std::vector<double>> weights;  // custom w, length d + m
  StepSchedule schedule;
  double gamma_RH = kDefaultGammaRH;
  double stability_floor = kDefaultStabilityFloor;

  int total_constraints() const noexcept;
  int m_lin() const noexcept { return total_constraints() - 1; }

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

struct MethodInterval {
  Method method;
  ConfidenceInterval ci;
  bool covered = false;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  Vector final_iterate;
  Vector averaged;
  std::vector<MethodInterval> intervals;
  double mae_last = 0.0;
  double mae_avg = 0.0;
  std::uint64_t flops_total = 0;
  bool diverged = false;
  std::string failure;
};

struct MethodSummary {
  Method method = Method::AveRS;
  double coverage = 0.0;  // over converged reps with an available interval
  double avg_len = 0.0;
  double flops_per_iter = 0.0;
  int n_available = 0;
};

struct AggregateRow {
  ExperimentConfig config;
  double truth = 0.0;  // w^T (x*, lambda*)
  double mae_last = 0.0;
  double mae_avg = 0.0;
  int n_diverged = 0;
  int n_converged = 0;
  bool valid = true;  // false when every replication diverged
  std::vector<MethodSummary> methods;
};

/// Problem instance shared by all replications of a config (drawn from
/// base_seed).
ProblemSpec problem_for(const ExperimentConfig& config);

/// Engine seed of replication `rep`: base_seed + rep (RandomStream applies
/// SplitMix64 on top so neighbouring seeds give unrelated streams).
std::uint64_t replication_seed(const ExperimentConfig& config, int rep) noexcept;

/// Weight vector w for the config (custom or coordinate average).
Vector inference_weights(const ExperimentConfig& config);

/// Per-iteration cost of maintaining each method's interval online.
double inference_flops_per_iter(Method method, int d, int m);

RunRecord run_replication(const ExperimentConfig& config, const ProblemSpec& problem, int rep);

AggregateRow aggregate(const ExperimentConfig& config, const ProblemSpec& problem,
                       const std::vector<RunRecord>& records);

/// workers <= 0 reads AISSQP_WORKERS, falling back to 1.
AggregateRow run_experiment(const ExperimentConfig& config, int workers = 0,
                            std::vector<RunRecord>* records = nullptr);

int resolve_workers(int requested);

// --- output ---------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "d,loss,design,r,tau,method,mae_last,mae_avg,coverage,avg_len,flops_per_iter,"
    "n_diverged,n_reps,seed";

void write_csv(const std::vector<AggregateRow>& rows, std::ostream& out);
void write_json(const std::vector<AggregateRow>& rows, std::ostream& out);
std::vector<AggregateRow> read_json(std::istream& in);

/// Writes to `path`; throws std::runtime_error when it cannot be opened.
void emit(const std::vector<AggregateRow>& rows, OutputFormat format, const std::string& path);

// --- config files ---------------------------------------------------------

/// Flat `key = value` lines; `[experiment]` starts a block; keys before the
/// first block are defaults for every block; `#` starts a comment.
std::vector<ExperimentConfig> parse_config(std::istream& in);

/// Applies one key/value to a config. Throws std::invalid_argument.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// d in {5, 20} (plus 40 if requested), identity / toeplitz 0.5 / equicorr 0.2,
/// tau in {40, exact}, both losses.
std::vector<ExperimentConfig> default_grid(bool include_d40, std::int64_t n_iters, int n_reps,
                                           std::uint64_t base_seed);

SketchConfig parse_tau(std::string_view text);

// --- trace ----------------------------------------------------------------

/// Single replication; one CSV row every `stride` iterations with the
/// last/averaged errors and the random-scaling interval at that time.
void write_trace(const ExperimentConfig& config, std::int64_t stride, std::ostream& out);

}  // namespace aissqp::bench
