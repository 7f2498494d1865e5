#pragma once
// Quick randomized property checks, runnable from the CLI without the test
// framework.

#include <cstdint>
#include <string>
#include <vector>

namespace aissqp {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SelfTestResult> run_selftests(std::uint64_t seed = 12345);

}  // namespace aissqp
