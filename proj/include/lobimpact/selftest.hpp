#pragma once

#include <functional>
#include <string>
#include <vector>

namespace lobimpact {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

struct SelftestOptions {
  std::string out_dir = "selftest_out";
  int threads = 0;  // 0: hardware concurrency
  bool repeat = true;  // run twice and compare the artifacts
};

// Artifacts go to out_dir/run1 (and out_dir/run2 when repeating). report is
// called as each criterion finishes.
std::vector<CriterionResult> run_selftest(const SelftestOptions& opt,
                                          const std::function<void(const CriterionResult&)>& report = nullptr);

}  // namespace lobimpact
