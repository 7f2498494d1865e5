#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "aissqp/bench.hpp"

using namespace aissqp;
using namespace aissqp::bench;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.n_iters = 2000;
  c.n_reps = 4;
  return c;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

int count_fields(const std::string& line) {
  int n = 1;
  for (char ch : line) n += ch == ',' ? 1 : 0;
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AISSQP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("small experiment produces one summary per method") {
  const ExperimentConfig c = tiny();
  std::vector<RunRecord> records;
  const AggregateRow row = run_experiment(c, 1, &records);
  CHECK(row.valid);
  CHECK(row.n_converged + row.n_diverged == 4);
  CHECK(records.size() == 4u);
  REQUIRE(row.methods.size() == all_methods().size());
  for (const auto& m : row.methods) {
    CHECK(m.coverage >= 0.0);
    CHECK(m.coverage <= 1.0);
    CHECK(m.avg_len > 0.0);
    CHECK(m.flops_per_iter > 0.0);
  }
  CHECK(row.mae_avg < row.mae_last);
  CHECK(row.truth == doctest::Approx(0.5));
}

TEST_CASE("parallel and serial runs agree") {
  const ExperimentConfig c = tiny();
  std::ostringstream a, b;
  write_csv({run_experiment(c, 1)}, a);
  write_csv({run_experiment(c, 3)}, b);
  CHECK(a.str() == b.str());
}

TEST_CASE("csv layout") {
  ExperimentConfig c = tiny();
  c.methods = {Method::AveRS, Method::AveBM};
  std::ostringstream out;
  write_csv({run_experiment(c, 1)}, out);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 3u);
  CHECK(lines[0] == kCsvHeader);
  for (const auto& l : lines) CHECK(count_fields(l) == 14);
  CHECK(lines[1].rfind("5,squared,identity,0,exact,AveRS,", 0) == 0);

  std::ostringstream empty;
  write_csv({}, empty);
  CHECK(empty.str() == std::string(kCsvHeader) + "\n");
}

TEST_CASE("json round trip") {
  ExperimentConfig c = tiny();
  c.sketch = SketchConfig::kaczmarz(10);
  const AggregateRow row = run_experiment(c, 1);
  std::stringstream io;
  write_json({row}, io);
  const auto back = read_json(io);
  REQUIRE(back.size() == 1u);
  CHECK(back[0].mae_avg == row.mae_avg);
  CHECK(back[0].config.sketch.tau == 10);
  REQUIRE(back[0].methods.size() == row.methods.size());
  for (std::size_t i = 0; i < row.methods.size(); ++i) {
    CHECK(back[0].methods[i].method == row.methods[i].method);
    CHECK(back[0].methods[i].coverage == row.methods[i].coverage);
    CHECK(back[0].methods[i].avg_len == row.methods[i].avg_len);
  }
}

TEST_CASE("config files") {
  std::istringstream in(
      "iters = 500  # shared\n"
      "reps = 3\n"
      "[experiment]\n"
      "loss = logistic\n"
      "tau = 40\n"
      "[experiment]\n"
      "d = 20\n"
      "design = toeplitz\n"
      "r = 0.5\n"
      "methods = AveRS,LastPlugIn\n");
  const auto cfgs = parse_config(in);
  REQUIRE(cfgs.size() == 2u);
  CHECK(cfgs[0].loss == LossKind::logistic);
  CHECK(cfgs[0].sketch.tau == 40);
  CHECK(cfgs[0].n_iters == 500);
  CHECK(cfgs[1].d == 20);
  CHECK(cfgs[1].total_constraints() == 3);
  CHECK(cfgs[1].m_lin() == 2);
  CHECK(cfgs[1].methods.size() == 2u);
  CHECK(cfgs[1].n_reps == 3);

  std::istringstream bad_key("[experiment]\nbogus = 1\n");
  CHECK_THROWS_AS(parse_config(bad_key), std::invalid_argument);
  std::istringstream bad_line("[experiment]\nloss squared\n");
  CHECK_THROWS_AS(parse_config(bad_line), std::invalid_argument);
  std::istringstream bad_value("[experiment]\nd = 1\n");
  CHECK_THROWS_AS(parse_config(bad_value), std::invalid_argument);
}

TEST_CASE("validation rejects impossible configs") {
  ExperimentConfig c = tiny();
  c.level = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = tiny();
  c.n_reps = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = tiny();
  c.weights = std::vector<double>{1.0, 2.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = tiny();
  c.stability_floor = -0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(parse_tau("0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("AveXX"), std::invalid_argument);
  CHECK(parse_tau("exact").mode == SketchMode::exact);
}

TEST_CASE("replication seeds and the default grid") {
  ExperimentConfig c = tiny();
  c.base_seed = 10;
  CHECK(replication_seed(c, 0) == 10u);
  CHECK(replication_seed(c, 5) == 15u);
  CHECK(default_grid(false, 100, 2, 1).size() == 2u * 3u * 2u * 2u);
  CHECK(default_grid(true, 100, 2, 1).size() == 3u * 3u * 2u * 2u);
}

TEST_CASE("trace output") {
  ExperimentConfig c = tiny();
  c.n_iters = 100;
  std::ostringstream out;
  write_trace(c, 10, out);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 11u);
  CHECK(lines[0] == "t,alpha,err_last,err_avg,constraint_avg,rs_center,rs_half_width");
  CHECK(lines[1].rfind("10,", 0) == 0);
  CHECK(lines.back().rfind("100,", 0) == 0);
  CHECK_THROWS_AS(write_trace(c, 0, out), std::invalid_argument);
}

TEST_CASE("command line exit codes") {
  CHECK(run_cli("run --iters 200 --reps 2") == 0);
  CHECK(run_cli("run --iters 200 --reps 2 --format json") == 0);
  CHECK(run_cli("run --dim 3 --constraints 3") == 2);
  CHECK(run_cli("run --level 2") == 2);
  CHECK(run_cli("run --tau 0") == 2);
  CHECK(run_cli("run --iters 10 --reps 1 --out /nonexistent/dir/x.csv") == 1);
  CHECK(run_cli("--no-such-flag") != 0);
  CHECK(run_cli("trace --iters 50 --stride 10") == 0);
}
