#pragma once

#include "ta/tensor.hpp"

namespace ta {

// PSNR in dB over [0,1]-scaled data, all channels and pixels pooled.
// Identical inputs return +infinity.
double psnr(const Tensor& a, const Tensor& b);

// Mean local SSIM on the BT.601 luma channel: 11x11 Gaussian window with
// sigma 1.5, C1 = 0.01^2, C2 = 0.03^2, averaged over fully interior window
// positions. Requires H, W >= 11.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace ta
