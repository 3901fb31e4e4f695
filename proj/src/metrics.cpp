#include "ta/metrics.hpp"

#include <cmath>
#include <limits>

#include "ta/errors.hpp"
#include "ta/image.hpp"

namespace ta {

double psnr(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("psnr: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("ssim: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  constexpr int win = 11;
  constexpr double win_sigma = 1.5;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;

  Tensor ya = a.rank() == 3 ? luma601(a) : a;
  Tensor yb = b.rank() == 3 ? luma601(b) : b;
  const int h = ya.dim(0), w = ya.dim(1);
  if (h < win || w < win) {
    throw ShapeError("ssim: image smaller than the 11x11 window, got " + a.shape_str());
  }

  double weights[win][win];
  double wsum = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double dy = i - (win - 1) / 2.0, dx = j - (win - 1) / 2.0;
      weights[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * win_sigma * win_sigma));
      wsum += weights[i][j];
    }
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) weights[i][j] /= wsum;

  double total = 0.0;
  std::size_t count = 0;
  for (int y = 0; y + win <= h; ++y) {
    for (int x = 0; x + win <= w; ++x) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          mu_a += weights[i][j] * ya(y + i, x + j);
          mu_b += weights[i][j] * yb(y + i, x + j);
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double da = ya(y + i, x + j) - mu_a;
          const double db = yb(y + i, x + j) - mu_b;
          var_a += weights[i][j] * da * da;
          var_b += weights[i][j] * db * db;
          cov += weights[i][j] * da * db;
        }
      const double s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      total += s;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace ta
