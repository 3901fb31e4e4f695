#pragma once

#include <string>

#include "ta/tensor.hpp"

namespace ta {

// Images are (3, H, W) tensors with values in [0, 1]. 8-bit import/export
// maps linearly to [0, 255] with round-to-nearest.

Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& img);

Tensor clamp01(const Tensor& img);

// ITU-R BT.601 luma of an RGB image -> (H, W).
Tensor luma601(const Tensor& img);

}  // namespace ta
