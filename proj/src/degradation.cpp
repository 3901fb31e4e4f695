#include "ta/degradation.hpp"

#include <algorithm>
#include <cmath>

#include "ta/errors.hpp"
#include "ta/image.hpp"

namespace ta {

namespace {

// Mirror an index into [0, n) without repeating the edge sample.
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

// Keys cubic kernel, a = -0.5.
double keys_cubic(double x) {
  x = std::abs(x);
  if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
  if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
  return 0.0;
}

// One separable resize pass along the leading spatial axis of (C, N, M),
// resizing N -> out_n.
Tensor resize_axis(const Tensor& src, int out_n) {
  const int c_count = src.dim(0), n_in = src.dim(1), m = src.dim(2);
  const double ratio = static_cast<double>(n_in) / out_n;
  const double ks = std::max(1.0, ratio);  // anti-alias width when shrinking
  const int radius = static_cast<int>(std::ceil(2.0 * ks));

  Tensor out({c_count, out_n, m});
  std::vector<int> taps;
  std::vector<double> weights;
  for (int i = 0; i < out_n; ++i) {
    const double center = (i + 0.5) * ratio - 0.5;
    taps.clear();
    weights.clear();
    double wsum = 0.0;
    const int j0 = static_cast<int>(std::floor(center)) - radius + 1;
    const int j1 = static_cast<int>(std::floor(center)) + radius;
    for (int j = j0; j <= j1; ++j) {
      const double w = keys_cubic((j - center) / ks);
      if (w == 0.0) continue;
      taps.push_back(std::clamp(j, 0, n_in - 1));
      weights.push_back(w);
      wsum += w;
    }
    for (double& w : weights) w /= wsum;
    for (int ch = 0; ch < c_count; ++ch) {
      for (int col = 0; col < m; ++col) {
        double acc = 0.0;
        for (std::size_t t = 0; t < taps.size(); ++t) acc += weights[t] * src(ch, taps[t], col);
        out(ch, i, col) = acc;
      }
    }
  }
  return out;
}

Tensor transpose_spatial(const Tensor& x) {
  Tensor out({x.dim(0), x.dim(2), x.dim(1)});
  for (int c = 0; c < x.dim(0); ++c)
    for (int y = 0; y < x.dim(1); ++y)
      for (int px = 0; px < x.dim(2); ++px) out(c, px, y) = x(c, y, px);
  return out;
}

Tensor add_noise(const Tensor& img, double noise_sigma, Rng& rng) {
  Tensor out = img;
  const double std01 = noise_sigma / 255.0;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += rng.normal(0.0, std01);
  return clamp01(out);
}

}  // namespace

Tensor gaussian_kernel(double sigma, int size) {
  if (!(sigma > 0.0)) throw NumericError("gaussian_kernel: sigma must be positive");
  if (size % 2 == 0 || size < 1) {
    throw ConfigError("gaussian_kernel: size must be odd, got " + std::to_string(size));
  }
  const int r = size / 2;
  Tensor k({size, size});
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) {
      const double v = std::exp(-(i * i + j * j) * inv2s2);
      k(i + r, j + r) = v;
      total += v;
    }
  const double inv = 1.0 / total;
  for (std::size_t i = 0; i < k.size(); ++i) k[i] *= inv;
  return k;
}

Tensor convolve_image(const Tensor& img, const Tensor& kernel) {
  if (img.rank() != 3) throw ShapeError("convolve_image: expected (C,H,W), got " + img.shape_str());
  if (kernel.rank() != 2 || kernel.rows() != kernel.cols() || kernel.rows() % 2 == 0) {
    throw ConfigError("convolve_image: kernel must be square with odd size");
  }
  const int c_count = img.dim(0), h = img.dim(1), w = img.dim(2);
  const int k = kernel.rows(), r = k / 2;
  Tensor out({c_count, h, w});
  for (int c = 0; c < c_count; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) {
          const int sy = reflect_index(y + i - r, h);
          for (int j = 0; j < k; ++j) {
            const int sx = reflect_index(x + j - r, w);
            acc += kernel(i, j) * img(c, sy, sx);
          }
        }
        out(c, y, x) = acc;
      }
  return out;
}

Tensor resize_bicubic(const Tensor& img, int out_h, int out_w) {
  if (img.rank() != 3) throw ShapeError("resize_bicubic: expected (C,H,W), got " + img.shape_str());
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bicubic: bad target size");
  Tensor rows = resize_axis(img, out_h);
  // Columns: transpose spatial dims, resize that axis, transpose back.
  return transpose_spatial(resize_axis(transpose_spatial(rows), out_w));
}

DegradationSpec DegradationSpec::train(int scale, double noise_sigma, int order) {
  auto [lo, hi] = train_sigma_range(scale);
  DegradationSpec s;
  s.scale = scale;
  s.sigma_lo = lo;
  s.sigma_hi = hi;
  s.noise_sigma = noise_sigma;
  s.order = order;
  return s;
}

std::pair<double, double> train_sigma_range(int scale) {
  switch (scale) {
    case 2: return {0.2, 2.0};
    case 3: return {0.2, 3.0};
    case 4: return {0.2, 4.0};
    default: throw ConfigError("train_sigma_range: scale must be 2, 3, or 4");
  }
}

std::vector<double> test_sigmas(int scale) {
  double lo, hi;
  switch (scale) {
    case 2: lo = 0.80; hi = 1.60; break;
    case 3: lo = 1.35; hi = 2.40; break;
    case 4: lo = 1.8; hi = 3.2; break;
    default: throw ConfigError("test_sigmas: scale must be 2, 3, or 4");
  }
  std::vector<double> out(8);
  for (int i = 0; i < 8; ++i) out[i] = lo + (hi - lo) * i / 7.0;
  return out;
}

Tensor degrade(const Tensor& hr, const DegradationSpec& spec, Rng& rng) {
  if (hr.rank() != 3 || hr.dim(0) != 3) {
    throw ShapeError("degrade: expected (3,H,W) image, got " + hr.shape_str());
  }
  if (spec.scale < 1 || spec.scale > 4) throw ConfigError("degrade: scale must be in 1..4");
  if (spec.order != 1 && spec.order != 2) throw ConfigError("degrade: order must be 1 or 2");
  if (hr.dim(1) % spec.scale != 0 || hr.dim(2) % spec.scale != 0) {
    throw ShapeError("degrade: " + hr.shape_str() + " not divisible by scale " +
                     std::to_string(spec.scale));
  }

  Tensor img = hr;
  const int stages = spec.order;
  for (int s = 0; s < stages; ++s) {
    const double sigma = rng.uniform(spec.sigma_lo, spec.sigma_hi);
    img = clamp01(convolve_image(img, gaussian_kernel(sigma)));
  }
  if (spec.scale > 1) {
    img = clamp01(resize_bicubic(img, hr.dim(1) / spec.scale, hr.dim(2) / spec.scale));
  }
  if (spec.noise_sigma > 0.0) {
    for (int s = 0; s < stages; ++s) img = add_noise(img, spec.noise_sigma, rng);
  }
  return img;
}

Tensor degrade_with_sigma(const Tensor& hr, double sigma, int scale, double noise_sigma, Rng& rng) {
  if (hr.dim(1) % scale != 0 || hr.dim(2) % scale != 0) {
    throw ShapeError("degrade_with_sigma: size not divisible by scale");
  }
  Tensor img = clamp01(convolve_image(hr, gaussian_kernel(sigma)));
  if (scale > 1) img = clamp01(resize_bicubic(img, hr.dim(1) / scale, hr.dim(2) / scale));
  if (noise_sigma > 0.0) img = add_noise(img, noise_sigma, rng);
  return img;
}

}  // namespace ta
