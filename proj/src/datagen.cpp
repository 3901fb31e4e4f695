#include "ta/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ta/degradation.hpp"
#include "ta/image.hpp"
#include "ta/rng.hpp"

namespace fs = std::filesystem;

namespace ta {

Tensor synth_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  Tensor img({3, size, size});

  // Bilinear gradient between four random corner colors.
  double corners[4][3];
  for (auto& corner : corners)
    for (double& v : corner) v = rng.uniform(0.0, 1.0);
  for (int y = 0; y < size; ++y) {
    const double fy = size > 1 ? static_cast<double>(y) / (size - 1) : 0.0;
    for (int x = 0; x < size; ++x) {
      const double fx = size > 1 ? static_cast<double>(x) / (size - 1) : 0.0;
      for (int c = 0; c < 3; ++c) {
        img(c, y, x) = (1 - fy) * ((1 - fx) * corners[0][c] + fx * corners[1][c]) +
                       fy * ((1 - fx) * corners[2][c] + fx * corners[3][c]);
      }
    }
  }

  // Solid rectangles with hard edges.
  const int nrect = rng.uniform_int(3, 6);
  for (int r = 0; r < nrect; ++r) {
    const int w = rng.uniform_int(size / 8, size / 2);
    const int h = rng.uniform_int(size / 8, size / 2);
    const int x0 = rng.uniform_int(0, size - w);
    const int y0 = rng.uniform_int(0, size - h);
    double col[3] = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x)
        for (int c = 0; c < 3; ++c) img(c, y, x) = col[c];
  }

  // Occasional checkerboard patch, the hardest content for a blur pipeline.
  if (rng.uniform(0.0, 1.0) < 0.6) {
    const int w = rng.uniform_int(size / 4, size / 2);
    const int h = rng.uniform_int(size / 4, size / 2);
    const int x0 = rng.uniform_int(0, size - w);
    const int y0 = rng.uniform_int(0, size - h);
    const int cell = rng.uniform_int(2, 4);
    double ca[3] = {rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.4)};
    double cb[3] = {rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)};
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) {
        const bool odd = ((y - y0) / cell + (x - x0) / cell) % 2 != 0;
        for (int c = 0; c < 3; ++c) img(c, y, x) = odd ? cb[c] : ca[c];
      }
  }

  // Thin strokes.
  const int nstroke = rng.uniform_int(2, 4);
  for (int sidx = 0; sidx < nstroke; ++sidx) {
    const double x0 = rng.uniform(0.0, size - 1.0), y0 = rng.uniform(0.0, size - 1.0);
    const double x1 = rng.uniform(0.0, size - 1.0), y1 = rng.uniform(0.0, size - 1.0);
    double col[3] = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
    const int steps = 3 * size;
    for (int t = 0; t <= steps; ++t) {
      const double f = static_cast<double>(t) / steps;
      const int x = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
      if (x >= 0 && x < size && y >= 0 && y < size)
        for (int c = 0; c < 3; ++c) img(c, y, x) = col[c];
    }
  }

  // Sinusoidal texture patch.
  if (rng.uniform(0.0, 1.0) < 0.7) {
    const int w = rng.uniform_int(size / 4, size / 2);
    const int h = rng.uniform_int(size / 4, size / 2);
    const int x0 = rng.uniform_int(0, size - w);
    const int y0 = rng.uniform_int(0, size - h);
    const double fx = rng.uniform(0.3, 1.4), fy = rng.uniform(0.3, 1.4);
    const double phase = rng.uniform(0.0, 6.28318);
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) {
        const double v = 0.5 + 0.5 * std::sin(fx * x + fy * y + phase);
        for (int c = 0; c < 3; ++c) img(c, y, x) = 0.5 * img(c, y, x) + 0.5 * v;
      }
  }

  return clamp01(img);
}

void generate_dataset(const std::string& out_dir, int train_count, int val_count, int size,
                      std::uint64_t seed, int lr_scale, double noise_sigma) {
  fs::create_directories(out_dir + "/hr");
  fs::create_directories(out_dir + "/val");
  if (lr_scale > 0) fs::create_directories(out_dir + "/lr");

  char name[32];
  for (int i = 0; i < train_count; ++i) {
    std::snprintf(name, sizeof(name), "img_%04d.ppm", i);
    Tensor hr = synth_image(size, seed ^ (0x1000ull + i));
    write_ppm(out_dir + "/hr/" + name, hr);
    if (lr_scale > 0) {
      Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(i));
      Tensor lr = degrade(hr, DegradationSpec::train(lr_scale, noise_sigma), rng);
      write_ppm(out_dir + "/lr/" + name, lr);
    }
  }
  for (int i = 0; i < val_count; ++i) {
    std::snprintf(name, sizeof(name), "img_%04d.ppm", i);
    write_ppm(out_dir + "/val/" + name, synth_image(size, seed ^ (0x9000ull + i)));
  }
}

}  // namespace ta
