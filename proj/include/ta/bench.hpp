#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ta/tensor.hpp"

namespace ta {

struct BenchRecord {
  std::string kernel;
  int n = 0;
  int d = 0;
  std::uint64_t flops = 0;
  std::uint64_t wall_ns = 0;
  std::uint64_t seed = 0;
};

// Known kernels: nla, exp, taylor-linear, stea, mlfr.
const std::vector<std::string>& bench_kernel_names();
bool is_bench_kernel(const std::string& name);

// Runs one seeded forward of the named kernel at (n, d) under a fresh
// FlopCounter. Inputs are scaled so the exponential guard never trips.
BenchRecord run_bench_kernel(const std::string& kernel, int n, int d, std::uint64_t seed);

// Least-squares slope of log(flops) against log(n) for one kernel's rows.
double fit_loglog_slope(const std::vector<BenchRecord>& records, const std::string& kernel);

// Sweep syntax: "256,512,1024" or geometric "256..4096x2".
std::vector<int> parse_sweep(const std::string& spec);

}  // namespace ta
