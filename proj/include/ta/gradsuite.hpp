#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ta {

struct GradSuiteResult {
  std::string op;
  double max_rel_err = 0.0;
  std::size_t coords = 0;
  double tolerance = 1e-4;
  bool pass = false;
  std::string worst_param;
  int worst_coord = -1;
};

// Finite-difference verification of every differentiable operation, from
// single kernels up to one-block LabNet and a small RealNet. With
// inject_fault an extra fixture with a deliberately wrong backward is
// appended; it must fail.
std::vector<GradSuiteResult> run_grad_suite(std::uint64_t seed, bool inject_fault = false);

}  // namespace ta
