#include "aissqp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace aissqp::bench {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  std::istringstream is(s);
  T value{};
  is >> value;
  if (s.empty() || is.fail() || !is.eof()) {
    throw std::invalid_argument("invalid value '" + s + "' for " + std::string(key));
  }
  return value;
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double json_number(const nlohmann::json& j) {
  return j.is_null() ? kNaN : j.get<double>();
}

nlohmann::json json_number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::AveRS: return "AveRS";
    case Method::AvePlugIn: return "AvePlugIn";
    case Method::AveBM: return "AveBM";
    case Method::LastPlugIn: return "LastPlugIn";
  }
  return "AveRS";
}

Method parse_method(std::string_view text) {
  for (Method m : all_methods())
    if (to_string(m) == text) return m;
  throw std::invalid_argument("unknown method '" + std::string(text) +
                              "' (expected AveRS|AvePlugIn|AveBM|LastPlugIn)");
}

std::vector<Method> parse_methods(std::string_view comma_list) {
  std::vector<Method> out;
  for (const auto& part : split(comma_list, ',')) {
    if (part.empty()) continue;
    const Method m = parse_method(part);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw std::invalid_argument("methods list is empty");
  return out;
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::AveRS, Method::AvePlugIn, Method::AveBM,
                                           Method::LastPlugIn};
  return methods;
}

OutputFormat parse_format(std::string_view text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown format '" + std::string(text) + "' (expected csv|json)");
}

SketchConfig parse_tau(std::string_view text) {
  const std::string s = trim(text);
  if (s == "exact" || s == "inf" || s == "infinity") return SketchConfig::exact();
  const int tau = parse_number<int>("tau", s);
  SketchConfig cfg = SketchConfig::kaczmarz(tau);
  cfg.validate();
  return cfg;
}

int ExperimentConfig::total_constraints() const noexcept {
  if (constraints) return *constraints;
  return d == 5 ? 1 : 3;
}

void ExperimentConfig::validate() const {
  if (d < 2) throw std::invalid_argument("dimension must be >= 2");
  const int m = total_constraints();
  if (m < 1 || m >= d) throw std::invalid_argument("constraint count m must satisfy 1 <= m < d");
  build_design_matrix(design, d);
  sketch.validate();
  schedule.validate();
  if (n_iters < 1) throw std::invalid_argument("iteration count must be >= 1");
  if (n_reps < 1) throw std::invalid_argument("replication count must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0,1)");
  if (std::find(methods.begin(), methods.end(), Method::AveRS) != methods.end()) {
    random_scaling_quantile(1.0 - (1.0 - level) / 2.0);
  }
  if (methods.empty()) throw std::invalid_argument("no inference methods selected");
  if (weights && static_cast<int>(weights->size()) != d + m) {
    throw std::invalid_argument("weight vector must have length d + m");
  }
  if (!(gamma_RH > 0.0)) throw std::invalid_argument("gamma_RH must be > 0");
  if (!(stability_floor >= 0.0)) throw std::invalid_argument("stability_floor must be >= 0");
}

ProblemSpec problem_for(const ExperimentConfig& config) {
  RandomStream rng(config.base_seed ^ 0x70726f626c656dULL);
  return make_problem(config.loss, config.d, config.m_lin(), config.design, rng);
}

std::uint64_t replication_seed(const ExperimentConfig& config, int rep) noexcept {
  return config.base_seed + static_cast<std::uint64_t>(rep);
}

Vector inference_weights(const ExperimentConfig& config) {
  const int m = config.total_constraints();
  if (config.weights) return Eigen::Map<const Vector>(config.weights->data(), config.d + m);
  return coordinate_average_weights(config.d, m);
}

double inference_flops_per_iter(Method method, int d, int m) {
  const double n = d + m;
  switch (method) {
    case Method::AveRS: return n * n + 2.0 * n;  // mean, P and Q updates
    case Method::AveBM: return n;                // batch sum
    case Method::AvePlugIn:
    case Method::LastPlugIn:
      // gradient outer product plus refreshing K^-1 Omega K^-1 each step
      return static_cast<double>(d) * d + n * n * n / 3.0 + 2.0 * n * n * d;
  }
  return 0.0;
}

RunRecord run_replication(const ExperimentConfig& config, const ProblemSpec& problem, int rep) {
  const auto& methods = config.methods;
  auto wants = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };

  SolverOptions options;
  options.sketch = config.sketch;
  options.schedule = config.schedule;
  options.gamma_RH = config.gamma_RH;
  options.stability_floor = config.stability_floor;
  InferenceConfig inference;
  inference.random_scaling = wants(Method::AveRS);
  inference.plugin = wants(Method::AvePlugIn) || wants(Method::LastPlugIn);
  inference.batch_means = wants(Method::AveBM);

  const std::uint64_t seed = replication_seed(config, rep);
  SolverRun solved = run(problem, options, config.n_iters, seed, inference);

  RunRecord rec;
  rec.seed = seed;
  rec.iterations = solved.iterations;
  rec.flops_total = solved.flops_total;
  rec.diverged = solved.diverged || !solved.averaged;
  rec.failure = solved.failure;
  rec.final_iterate = solved.final_iterate.stacked();
  if (rec.diverged) {
    if (rec.failure.empty()) rec.failure = "no averaged iterate";
    return rec;
  }
  rec.averaged = *solved.averaged;

  const Vector truth = true_solution(problem).stacked();
  rec.mae_last = (rec.final_iterate - truth).norm();
  rec.mae_avg = (rec.averaged - truth).norm();

  const Vector w = inference_weights(config);
  const double target = w.dot(truth);

  std::optional<Matrix> xi_hat;
  if (solved.plugin) {
    try {
      xi_hat = solved.plugin->covariance();
    } catch (const std::runtime_error&) {
      xi_hat.reset();
    }
  }

  for (Method m : methods) {
    MethodInterval mi{m, {}, false};
    switch (m) {
      case Method::AveRS:
        mi.ci = rs_confint(*solved.rs, w, config.level);
        break;
      case Method::AveBM:
        mi.ci = bm_confint(*solved.bm, rec.averaged, w, config.level);
        break;
      case Method::AvePlugIn:
      case Method::LastPlugIn: {
        const bool last = m == Method::LastPlugIn;
        const Vector& center = last ? rec.final_iterate : rec.averaged;
        if (xi_hat) {
          mi.ci = plugin_confint(*xi_hat, solved.plugin->count(), center, w, config.level,
                                 last ? PluginScaling::last : PluginScaling::averaged,
                                 solved.beta_last);
        } else {
          mi.ci.center = w.dot(center);
          mi.ci.level = config.level;
          mi.ci.available = false;
        }
        break;
      }
    }
    mi.covered = mi.ci.contains(target);
    rec.intervals.push_back(mi);
  }
  return rec;
}

AggregateRow aggregate(const ExperimentConfig& config, const ProblemSpec& problem,
                       const std::vector<RunRecord>& records) {
  AggregateRow row;
  row.config = config;
  row.truth = inference_weights(config).dot(true_solution(problem).stacked());

  double flops_per_iter_solver = 0.0;
  for (const auto& r : records) {
    if (r.diverged) {
      ++row.n_diverged;
      continue;
    }
    ++row.n_converged;
    row.mae_last += r.mae_last;
    row.mae_avg += r.mae_avg;
    flops_per_iter_solver += static_cast<double>(r.flops_total) / static_cast<double>(r.iterations);
  }
  row.valid = row.n_converged > 0;
  if (row.valid) {
    row.mae_last /= row.n_converged;
    row.mae_avg /= row.n_converged;
    flops_per_iter_solver /= row.n_converged;
  } else {
    row.mae_last = row.mae_avg = flops_per_iter_solver = kNaN;
  }

  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    MethodSummary s;
    s.method = config.methods[k];
    int covered = 0;
    double len = 0.0;
    for (const auto& r : records) {
      if (r.diverged) continue;
      const auto& mi = r.intervals[k];
      if (!mi.ci.available) continue;
      ++s.n_available;
      covered += mi.covered ? 1 : 0;
      len += mi.ci.length();
    }
    s.coverage = s.n_available > 0 ? static_cast<double>(covered) / s.n_available : kNaN;
    s.avg_len = s.n_available > 0 ? len / s.n_available : kNaN;
    s.flops_per_iter =
        flops_per_iter_solver + inference_flops_per_iter(s.method, config.d, config.total_constraints());
    row.methods.push_back(s);
  }
  return row;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("AISSQP_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

AggregateRow run_experiment(const ExperimentConfig& config, int workers,
                            std::vector<RunRecord>* records_out) {
  config.validate();
  const ProblemSpec problem = problem_for(config);
  std::vector<RunRecord> records(static_cast<std::size_t>(config.n_reps));

  const int n_workers = std::min(resolve_workers(workers), config.n_reps);
  if (n_workers <= 1) {
    for (int rep = 0; rep < config.n_reps; ++rep) records[rep] = run_replication(config, problem, rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (int rep = next++; rep < config.n_reps; rep = next++) {
          records[rep] = run_replication(config, problem, rep);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  AggregateRow row = aggregate(config, problem, records);
  if (records_out) *records_out = std::move(records);
  return row;
}

// ---------------------------------------------------------------------------
// Output

void write_csv(const std::vector<AggregateRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& row : rows) {
    const auto& c = row.config;
    const double r = c.design.kind == DesignKind::identity ? 0.0 : c.design.r;
    for (const auto& s : row.methods) {
      out << c.d << ',' << to_string(c.loss) << ',' << to_string(c.design.kind) << ',' << fmt17(r)
          << ',' << c.sketch.label() << ',' << to_string(s.method) << ',' << fmt17(row.mae_last)
          << ',' << fmt17(row.mae_avg) << ',' << fmt17(s.coverage) << ',' << fmt17(s.avg_len) << ','
          << fmt17(s.flops_per_iter) << ',' << row.n_diverged << ',' << c.n_reps << ','
          << c.base_seed << '\n';
    }
  }
}

void write_json(const std::vector<AggregateRow>& rows, std::ostream& out) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    const auto& c = row.config;
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& s : row.methods) {
      methods.push_back({{"method", to_string(s.method)},
                         {"coverage", json_number_or_null(s.coverage)},
                         {"avg_len", json_number_or_null(s.avg_len)},
                         {"flops_per_iter", json_number_or_null(s.flops_per_iter)},
                         {"n_available", s.n_available}});
    }
    nlohmann::json config = {
        {"d", c.d},
        {"loss", to_string(c.loss)},
        {"constraints", c.total_constraints()},
        {"design", to_string(c.design.kind)},
        {"r", c.design.kind == DesignKind::identity ? 0.0 : c.design.r},
        {"tau", c.sketch.label()},
        {"n_iters", c.n_iters},
        {"n_reps", c.n_reps},
        {"seed", c.base_seed},
        {"level", c.level},
    };
    if (c.weights) config["weights"] = *c.weights;
    arr.push_back({{"config", config},
                   {"truth", row.truth},
                   {"mae_last", json_number_or_null(row.mae_last)},
                   {"mae_avg", json_number_or_null(row.mae_avg)},
                   {"n_diverged", row.n_diverged},
                   {"n_converged", row.n_converged},
                   {"valid", row.valid},
                   {"methods", methods}});
  }
  out << nlohmann::json{{"rows", arr}}.dump(2) << '\n';
}

std::vector<AggregateRow> read_json(std::istream& in) {
  const nlohmann::json doc = nlohmann::json::parse(in);
  std::vector<AggregateRow> rows;
  for (const auto& j : doc.at("rows")) {
    AggregateRow row;
    const auto& jc = j.at("config");
    ExperimentConfig& c = row.config;
    c.d = jc.at("d").get<int>();
    c.loss = parse_loss_kind(jc.at("loss").get<std::string>());
    c.constraints = jc.at("constraints").get<int>();
    c.design.kind = parse_design_kind(jc.at("design").get<std::string>());
    c.design.r = jc.at("r").get<double>();
    c.sketch = parse_tau(jc.at("tau").get<std::string>());
    c.n_iters = jc.at("n_iters").get<std::int64_t>();
    c.n_reps = jc.at("n_reps").get<int>();
    c.base_seed = jc.at("seed").get<std::uint64_t>();
    c.level = jc.at("level").get<double>();
    if (jc.contains("weights")) c.weights = jc.at("weights").get<std::vector<double>>();
    c.methods.clear();
    row.truth = j.at("truth").get<double>();
    row.mae_last = json_number(j.at("mae_last"));
    row.mae_avg = json_number(j.at("mae_avg"));
    row.n_diverged = j.at("n_diverged").get<int>();
    row.n_converged = j.at("n_converged").get<int>();
    row.valid = j.at("valid").get<bool>();
    for (const auto& jm : j.at("methods")) {
      MethodSummary s;
      s.method = parse_method(jm.at("method").get<std::string>());
      s.coverage = json_number(jm.at("coverage"));
      s.avg_len = json_number(jm.at("avg_len"));
      s.flops_per_iter = json_number(jm.at("flops_per_iter"));
      s.n_available = jm.at("n_available").get<int>();
      c.methods.push_back(s.method);
      row.methods.push_back(s);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit(const std::vector<AggregateRow>& rows, OutputFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  if (format == OutputFormat::csv) {
    write_csv(rows, out);
  } else {
    write_json(rows, out);
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Config files

void apply_setting(ExperimentConfig& c, std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "loss") {
    c.loss = parse_loss_kind(value);
  } else if (key == "dim" || key == "d") {
    c.d = parse_number<int>(key, value);
  } else if (key == "constraints" || key == "m") {
    c.constraints = parse_number<int>(key, value);
  } else if (key == "design") {
    c.design.kind = parse_design_kind(value);
  } else if (key == "r") {
    c.design.r = parse_number<double>(key, value);
  } else if (key == "tau") {
    c.sketch = parse_tau(value);
  } else if (key == "iters") {
    c.n_iters = parse_number<std::int64_t>(key, value);
  } else if (key == "reps") {
    c.n_reps = parse_number<int>(key, value);
  } else if (key == "seed") {
    c.base_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "level") {
    c.level = parse_number<double>(key, value);
  } else if (key == "methods") {
    c.methods = parse_methods(value);
  } else if (key == "weights") {
    std::vector<double> w;
    for (const auto& part : split(value, ',')) w.push_back(parse_number<double>(key, part));
    c.weights = std::move(w);
  } else if (key == "gamma_rh") {
    c.gamma_RH = parse_number<double>(key, value);
  } else if (key == "stability_floor") {
    c.stability_floor = parse_number<double>(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::vector<ExperimentConfig> parse_config(std::istream& in) {
  ExperimentConfig defaults;
  std::vector<ExperimentConfig> blocks;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "[experiment]") {
      blocks.push_back(defaults);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(blocks.empty() ? defaults : blocks.back(), t.substr(0, eq), t.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (const auto& b : blocks) b.validate();
  return blocks;
}

std::vector<ExperimentConfig> default_grid(bool include_d40, std::int64_t n_iters, int n_reps,
                                           std::uint64_t base_seed) {
  std::vector<int> dims{5, 20};
  if (include_d40) dims.push_back(40);
  const std::vector<DesignCov> designs{{DesignKind::identity, 0.0},
                                       {DesignKind::toeplitz, 0.5},
                                       {DesignKind::equicorr, 0.2}};
  const std::vector<SketchConfig> sketches{SketchConfig::kaczmarz(40), SketchConfig::exact()};
  std::vector<ExperimentConfig> grid;
  for (int d : dims)
    for (const auto& design : designs)
      for (const auto& sketch : sketches)
        for (LossKind loss : {LossKind::squared, LossKind::logistic}) {
          ExperimentConfig c;
          c.loss = loss;
          c.d = d;
          c.design = design;
          c.sketch = sketch;
          c.n_iters = n_iters;
          c.n_reps = n_reps;
          c.base_seed = base_seed;
          grid.push_back(c);
        }
  return grid;
}

// ---------------------------------------------------------------------------
// Trace

void write_trace(const ExperimentConfig& config, std::int64_t stride, std::ostream& out) {
  config.validate();
  if (stride < 1) throw std::invalid_argument("trace stride must be >= 1");
  const ProblemSpec problem = problem_for(config);
  const Vector truth = true_solution(problem).stacked();
  const Vector w = inference_weights(config);

  SolverOptions options;
  options.sketch = config.sketch;
  options.schedule = config.schedule;
  options.gamma_RH = config.gamma_RH;
  options.stability_floor = config.stability_floor;
  InferenceConfig inference;
  inference.plugin = false;
  inference.batch_means = false;

  out << "t,alpha,err_last,err_avg,constraint_avg,rs_center,rs_half_width\n";
  auto observer = [&](const SolverState& state, const StepInfo& info) {
    if (state.t % stride != 0) return;
    const Vector avg = state.averaged();
    const Vector last = state.iterate.stacked();
    const ConfidenceInterval ci = rs_confint(*state.rs, w, config.level);
    const Vector c_avg = constraints(problem, Vector(avg.head(problem.d))).c;
    out << state.t << ',' << fmt17(info.alpha) << ',' << fmt17((last - truth).norm()) << ','
        << fmt17((avg - truth).norm()) << ',' << fmt17(c_avg.norm()) << ',' << fmt17(ci.center)
        << ',' << fmt17(ci.available ? ci.half_width : kNaN) << '\n';
  };
  const SolverRun solved =
      run(problem, options, config.n_iters, replication_seed(config, 0), inference, observer);
  if (solved.diverged) throw std::runtime_error("trace run diverged: " + solved.failure);
}

}  // namespace aissqp::bench
