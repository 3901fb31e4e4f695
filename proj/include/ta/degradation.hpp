#pragma once

#include <vector>

#include "ta/rng.hpp"
#include "ta/tensor.hpp"

namespace ta {

// Blind-SR degradation pipeline: Gaussian blur with a randomly sampled
// sigma, bicubic downsampling, additive Gaussian noise (std given on the
// 0-255 scale), optionally applied as a second-order pipeline that repeats
// the blur and noise stages with fresh samples around a single resize.

// Isotropic normalized Gaussian kernel on a centered odd grid.
Tensor gaussian_kernel(double sigma, int size = 21);

// Shared-kernel convolution of an RGB image with mirror padding.
Tensor convolve_image(const Tensor& img, const Tensor& kernel);

// Keys bicubic (a = -0.5) resize, separable, with kernel-width anti-alias
// scaling when shrinking and edge replication at the borders.
Tensor resize_bicubic(const Tensor& img, int out_h, int out_w);

struct DegradationSpec {
  int scale = 2;             // 1 allowed for near-identity checks
  double sigma_lo = 0.2;
  double sigma_hi = 2.0;
  double noise_sigma = 0.0;  // pixel units on the 0-255 scale
  int order = 1;             // 1 or 2

  static DegradationSpec train(int scale, double noise_sigma = 0.0, int order = 1);
};

// Training sigma range per scale: x2 [0.2,2.0], x3 [0.2,3.0], x4 [0.2,4.0].
std::pair<double, double> train_sigma_range(int scale);
// Eight evenly spaced evaluation sigmas (inclusive endpoints) per scale:
// x2 [0.80,1.60], x3 [1.35,2.40], x4 [1.8,3.2].
std::vector<double> test_sigmas(int scale);

// hr (3,H,W) with H,W divisible by scale -> lr (3,H/s,W/s). Values are
// clamped to [0,1] after every stage. Deterministic given (spec, rng seed).
Tensor degrade(const Tensor& hr, const DegradationSpec& spec, Rng& rng);

// Fixed-sigma variant used by evaluation (no randomness beyond noise).
Tensor degrade_with_sigma(const Tensor& hr, double sigma, int scale, double noise_sigma, Rng& rng);

}  // namespace ta
