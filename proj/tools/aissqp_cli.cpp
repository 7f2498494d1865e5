// aissqp: replicated constrained-regression experiments with online
// confidence intervals.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>

#include "aissqp/bench.hpp"
#include "aissqp/kernels.hpp"
#include "aissqp/selftest.hpp"

namespace {

using namespace aissqp;
using namespace aissqp::bench;

struct RunFlags {
  std::string loss = "squared";
  int dim = 5;
  int constraints = 0;
  std::string design = "identity";
  double r = 0.0;
  std::string tau = "exact";
  std::int64_t iters = 100000;
  int reps = 200;
  std::uint64_t seed = 1;
  double level = 0.95;
  std::string methods = "AveRS,AvePlugIn,AveBM,LastPlugIn";
  std::string weights;
  double stability_floor = kDefaultStabilityFloor;

  void add_to(CLI::App& app) {
    app.add_option("--loss", loss, "squared | logistic")->capture_default_str();
    app.add_option("--dim", dim, "parameter dimension d")->capture_default_str();
    app.add_option("--constraints", constraints,
                   "total constraint count m (default: 1 for d=5, else 3)");
    app.add_option("--design", design, "identity | toeplitz | equicorr")->capture_default_str();
    app.add_option("--r", r, "design correlation parameter")->capture_default_str();
    app.add_option("--tau", tau, "sketching steps, or 'exact'")->capture_default_str();
    app.add_option("--iters", iters, "iterations per replication")->capture_default_str();
    app.add_option("--reps", reps, "replications")->capture_default_str();
    app.add_option("--seed", seed, "base seed")->capture_default_str();
    app.add_option("--level", level, "nominal coverage")->capture_default_str();
    app.add_option("--methods", methods, "comma-separated inference methods")->capture_default_str();
    app.add_option("--weights", weights, "comma-separated w of length d+m (default: mean of x)");
    app.add_option("--stability-floor", stability_floor,
                   "early reduced-Hessian floor scale; 0 leaves only gamma_RH")
        ->capture_default_str();
  }

  ExperimentConfig build() const {
    ExperimentConfig c;
    apply_setting(c, "loss", loss);
    c.d = dim;
    if (constraints > 0) c.constraints = constraints;
    apply_setting(c, "design", design);
    c.design.r = r;
    c.sketch = parse_tau(tau);
    c.n_iters = iters;
    c.n_reps = reps;
    c.base_seed = seed;
    c.level = level;
    c.methods = parse_methods(methods);
    if (!weights.empty()) apply_setting(c, "weights", weights);
    c.stability_floor = stability_floor;
    c.validate();
    return c;
  }
};

void write_rows(const std::vector<AggregateRow>& rows, const std::string& format,
                const std::string& out) {
  const OutputFormat fmt = parse_format(format);
  if (out.empty() || out == "-") {
    if (fmt == OutputFormat::csv) {
      write_csv(rows, std::cout);
    } else {
      write_json(rows, std::cout);
    }
  } else {
    emit(rows, fmt, out);
  }
}

void report(const AggregateRow& row) {
  const auto& c = row.config;
  std::cerr << "d=" << c.d << " loss=" << to_string(c.loss) << " design=" << to_string(c.design.kind)
            << " tau=" << c.sketch.label() << ": mae_last=" << row.mae_last
            << " mae_avg=" << row.mae_avg << " diverged=" << row.n_diverged << "/" << c.n_reps;
  for (const auto& s : row.methods) {
    std::cerr << " " << to_string(s.method) << "[cov=" << s.coverage << " len=" << s.avg_len << "]";
  }
  std::cerr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive inexact stochastic SQP with online inference"};
  app.require_subcommand(1);

  RunFlags run_flags;
  std::string run_out, run_format = "csv";
  int run_parallel = 0;
  auto* run_cmd = app.add_subcommand("run", "run one experiment configuration");
  run_flags.add_to(*run_cmd);
  run_cmd->add_option("--out", run_out, "output path (default: stdout)");
  run_cmd->add_option("--format", run_format, "csv | json")->capture_default_str();
  run_cmd->add_option("--parallel", run_parallel, "worker threads across replications");

  std::string grid_config, grid_out, grid_format = "csv";
  int grid_parallel = 0;
  bool grid_d40 = false;
  std::int64_t grid_iters = 100000;
  int grid_reps = 200;
  std::uint64_t grid_seed = 1;
  auto* grid_cmd = app.add_subcommand("grid", "run many configurations");
  grid_cmd->add_option("--config", grid_config, "experiment file (default: built-in grid)");
  grid_cmd->add_option("--out", grid_out, "output path (default: stdout)");
  grid_cmd->add_option("--format", grid_format, "csv | json")->capture_default_str();
  grid_cmd->add_option("--parallel", grid_parallel, "worker threads across replications");
  grid_cmd->add_flag("--include-d40", grid_d40, "add d = 40 to the built-in grid");
  grid_cmd->add_option("--iters", grid_iters, "iterations for the built-in grid")->capture_default_str();
  grid_cmd->add_option("--reps", grid_reps, "replications for the built-in grid")->capture_default_str();
  grid_cmd->add_option("--seed", grid_seed, "base seed for the built-in grid")->capture_default_str();

  RunFlags trace_flags;
  std::int64_t trace_stride = 100;
  std::string trace_out;
  auto* trace_cmd = app.add_subcommand("trace", "dump one trajectory for plotting");
  trace_flags.add_to(*trace_cmd);
  trace_cmd->add_option("--stride", trace_stride, "record every k-th iteration")->capture_default_str();
  trace_cmd->add_option("--out", trace_out, "output path (default: stdout)");

  std::uint64_t selftest_seed = 12345;
  auto* selftest_cmd = app.add_subcommand("selftest", "run randomized property checks");
  selftest_cmd->add_option("--seed", selftest_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const ExperimentConfig config = run_flags.build();
      const AggregateRow row = run_experiment(config, run_parallel);
      report(row);
      write_rows({row}, run_format, run_out);
      return row.valid ? 0 : 3;
    }
    if (*grid_cmd) {
      std::vector<ExperimentConfig> configs;
      if (grid_config.empty()) {
        configs = default_grid(grid_d40, grid_iters, grid_reps, grid_seed);
      } else {
        std::ifstream in(grid_config);
        if (!in) throw std::runtime_error("cannot read config file '" + grid_config + "'");
        configs = parse_config(in);
      }
      std::vector<AggregateRow> rows;
      for (const auto& c : configs) {
        rows.push_back(run_experiment(c, grid_parallel));
        report(rows.back());
      }
      write_rows(rows, grid_format, grid_out);
      return 0;
    }
    if (*trace_cmd) {
      const ExperimentConfig config = trace_flags.build();
      if (trace_out.empty() || trace_out == "-") {
        write_trace(config, trace_stride, std::cout);
      } else {
        std::ofstream out(trace_out);
        if (!out) throw std::runtime_error("cannot open output file '" + trace_out + "'");
        write_trace(config, trace_stride, out);
      }
      return 0;
    }
    if (*selftest_cmd) {
      bool ok = true;
      std::cout << "kernels: " << aissqp::kernels::active().name << '\n';
      for (const auto& r : run_selftests(selftest_seed)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << '\n';
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
