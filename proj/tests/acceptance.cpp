#include "lobimpact/selftest.hpp"

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
  lobimpact::SelftestOptions opt;
  opt.out_dir = argc > 1 ? argv[1] : "acceptance_out";
  int failed = 0;
  lobimpact::run_selftest(opt, [&](const lobimpact::CriterionResult& r) {
    std::printf("%s criterion %d: %s | %s (%.1f s)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    failed += !r.passed;
  });
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
