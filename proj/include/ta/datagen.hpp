#pragma once

#include <cstdint>
#include <string>

#include "ta/tensor.hpp"

namespace ta {

// Procedural training corpus: smooth color gradients overlaid with random
// rectangles, strokes, and sinusoidal texture so there are sharp edges for a
// restorer to learn. Writes out_dir/hr and out_dir/val; when lr_scale > 0 an
// lr/ folder mirrors hr/ through the training degradation (per-item seeds).
void generate_dataset(const std::string& out_dir, int train_count, int val_count, int size,
                      std::uint64_t seed, int lr_scale = 0, double noise_sigma = 0.0);

// One synthetic image (3, size, size), deterministic in seed.
Tensor synth_image(int size, std::uint64_t seed);

}  // namespace ta
