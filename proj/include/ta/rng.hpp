#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ta/tensor.hpp"

namespace ta {

// Seeded random stream. All randomness in the library flows through one of
// these so runs are reproducible bit-for-bit from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }
  double normal(double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(engine_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    std::uniform_int_distribution<int> d(lo, hi);
    return d(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  // Per-item stream for dataset synthesis: seed = base ^ item index.
  static Rng derived(std::uint64_t base_seed, std::uint64_t item) {
    return Rng(base_seed ^ (item * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull));
  }

  Tensor uniform_tensor(std::vector<int> shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
    return t;
  }

  // Uniform in +-sqrt(6/(fan_in+fan_out)), the scheme used for every conv
  // and linear weight in this project.
  Tensor xavier_tensor(std::vector<int> shape, int fan_in, int fan_out) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    return uniform_tensor(std::move(shape), -bound, bound);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ta
