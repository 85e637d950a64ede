#pragma once

// Quick oracle and property self-checks, runnable from the command line.

#include <ostream>
#include <string>
#include <vector>

namespace optail {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs every check, printing one line each. Takes a few seconds.
std::vector<CheckResult> run_self_checks(std::ostream& log);

}  // namespace optail
