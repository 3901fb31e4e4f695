#include "ta/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ta/attention.hpp"
#include "ta/errors.hpp"
#include "ta/flops.hpp"
#include "ta/mlfr.hpp"
#include "ta/rng.hpp"

namespace ta {

const std::vector<std::string>& bench_kernel_names() {
  static const std::vector<std::string> names = {"nla", "exp", "taylor-linear", "stea", "mlfr"};
  return names;
}

bool is_bench_kernel(const std::string& name) {
  const auto& names = bench_kernel_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

namespace {

// Factor n into H x W with H the largest divisor <= sqrt(n).
std::pair<int, int> spatial_factor(int n) {
  int h = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (h > 1 && n % h != 0) --h;
  return {h, n / h};
}

}  // namespace

BenchRecord run_bench_kernel(const std::string& kernel, int n, int d, std::uint64_t seed) {
  if (!is_bench_kernel(kernel)) throw ConfigError("unknown bench kernel '" + kernel + "'");
  Rng rng(seed);
  FlopCounter counter;

  const auto t0 = std::chrono::steady_clock::now();
  {
    FlopScope scope(counter);
    if (kernel == "nla" || kernel == "exp" || kernel == "taylor-linear") {
      // Small entries keep |QK^T| well under the exp guard at any N.
      Tensor x = rng.uniform_tensor({n, d}, -0.25, 0.25);
      QkvWeights w = QkvWeights::random(d, rng);
      if (kernel == "nla") {
        nla_forward(x, w);
      } else if (kernel == "exp") {
        exp_kernel_forward(x, w, static_cast<double>(n));
      } else {
        taylor_attention_linear(x, w, TaylorOrder(2), static_cast<double>(n));
      }
    } else {
      auto [h, w] = spatial_factor(n);
      Tensor x = rng.uniform_tensor({d, h, w}, -1.0, 1.0);
      if (kernel == "stea") {
        SteaUnit unit(d, 2, true, rng, static_cast<double>(n));
        unit.forward(x);
      } else {
        MlfrBlock block(d, MlfrVariant(3), rng);
        block.forward(x);
      }
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  BenchRecord rec;
  rec.kernel = kernel;
  rec.n = n;
  rec.d = d;
  rec.flops = counter.multiply_adds();
  rec.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  rec.seed = seed;
  return rec;
}

double fit_loglog_slope(const std::vector<BenchRecord>& records, const std::string& kernel) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (const BenchRecord& r : records) {
    if (r.kernel != kernel) continue;
    const double x = std::log(static_cast<double>(r.n));
    const double y = std::log(static_cast<double>(r.flops));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) throw ConfigError("fit_loglog_slope: need at least two points for " + kernel);
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

std::vector<int> parse_sweep(const std::string& spec) {
  std::vector<int> out;
  const auto range_pos = spec.find("..");
  if (range_pos != std::string::npos) {
    const auto x_pos = spec.find('x', range_pos + 2);
    if (x_pos == std::string::npos) {
      throw ConfigError("sweep '" + spec + "': expected start..endxfactor");
    }
    const int start = std::stoi(spec.substr(0, range_pos));
    const int end = std::stoi(spec.substr(range_pos + 2, x_pos - range_pos - 2));
    const int factor = std::stoi(spec.substr(x_pos + 1));
    if (start < 1 || end < start || factor < 2) {
      throw ConfigError("sweep '" + spec + "': bad geometric range");
    }
    for (long long v = start; v <= end; v *= factor) out.push_back(static_cast<int>(v));
    return out;
  }
  std::size_t pos = 0;
  while (pos < spec.size()) {
    const auto comma = spec.find(',', pos);
    const std::string part = spec.substr(pos, comma == std::string::npos ? spec.npos : comma - pos);
    if (!part.empty()) out.push_back(std::stoi(part));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("sweep '" + spec + "': no values");
  return out;
}

}  // namespace ta
