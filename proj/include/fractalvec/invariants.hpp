#pragma once

// Self-check suite behind `fractalvec verify`: one entry per structural
// identity, each with its measured worst case and tolerance.

#include <cstdint>
#include <string>
#include <vector>

namespace fv {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct InvariantOptions {
  std::uint64_t seed = 0;
  int trials = 100;
  int probes = 200;
  int kusuoka_max_level = 7;
};

std::vector<CheckResult> run_invariants(const InvariantOptions& options = {});

}  // namespace fv
