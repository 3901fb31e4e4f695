#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ta/degradation.hpp"
#include "ta/image.hpp"
#include "ta/metrics.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"

#include "oracles.hpp"

using namespace ta;

TEST_CASE("gaussian kernel basics") {
  Tensor tiny = gaussian_kernel(0.05, 21);
  CHECK(tiny(10, 10) > 0.999);

  Tensor k = gaussian_kernel(1.7, 21);
  CHECK(std::abs(sum(k) - 1.0) <= 1e-12);
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) {
      CHECK(k(i, j) == k(20 - i, 20 - j));  // 180-degree rotation, exact
      CHECK(k(i, j) == k(j, i));
      CHECK(k(i, j) >= 0.0);
    }

  Tensor unit = gaussian_kernel(1.0, 21);
  CHECK(std::abs(unit(10, 11) / unit(10, 10) - std::exp(-0.5)) <= 1e-12);

  CHECK_THROWS_AS(gaussian_kernel(1.0, 20), ConfigError);
  CHECK_THROWS_AS(gaussian_kernel(0.0, 21), NumericError);
}

TEST_CASE("kernel normalization and symmetry across the sampling ranges") {
  Rng rng(1);
  for (int scale : {2, 3, 4}) {
    auto [lo, hi] = train_sigma_range(scale);
    for (int trial = 0; trial < 67; ++trial) {
      Tensor k = gaussian_kernel(rng.uniform(lo, hi), 21);
      CHECK(std::abs(sum(k) - 1.0) <= 1e-12);
      CHECK(k(3, 7) == k(17, 13));
    }
  }
}

TEST_CASE("test sigma grids are inclusive 8-point linspaces") {
  const std::vector<double> s2 = test_sigmas(2);
  REQUIRE(s2.size() == 8);
  CHECK(s2.front() == doctest::Approx(0.80));
  CHECK(s2.back() == doctest::Approx(1.60));
  const std::vector<double> s4 = test_sigmas(4);
  CHECK(s4.front() == doctest::Approx(1.8));
  CHECK(s4.back() == doctest::Approx(3.2));
}

TEST_CASE("near-identity pipeline at scale 1") {
  Rng rng(2);
  Tensor hr = rng.uniform_tensor({3, 16, 16}, 0.1, 0.9);
  DegradationSpec spec;
  spec.scale = 1;
  spec.sigma_lo = spec.sigma_hi = 0.05;
  spec.noise_sigma = 0.0;
  Rng deg_rng(3);
  Tensor lr = degrade(hr, spec, deg_rng);
  CHECK(lr.shape() == hr.shape());
  CHECK(max_abs_diff(lr, hr) < 1e-3);
}

TEST_CASE("bicubic downsampling reproduces constants exactly") {
  Tensor c = Tensor::full({3, 16, 16}, 0.437);
  Tensor down = resize_bicubic(c, 8, 8);
  for (std::size_t i = 0; i < down.size(); ++i)
    CHECK(down[i] == doctest::Approx(0.437).epsilon(1e-14));
}

TEST_CASE("bicubic downsampling keeps interior linear ramps linear") {
  Tensor ramp({3, 16, 16});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) ramp(c, y, x) = 0.01 * x + 0.05 * c;
  Tensor down = resize_bicubic(ramp, 16, 8);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int i = 2; i <= 5; ++i) {
        const double src_x = (i + 0.5) * 2.0 - 0.5;
        CHECK(std::abs(down(c, y, i) - (0.01 * src_x + 0.05 * c)) <= 1e-10);
      }
}

TEST_CASE("degrade is deterministic given spec and seed and checks divisibility") {
  Rng rng(4);
  Tensor hr = rng.uniform_tensor({3, 16, 16}, 0.0, 1.0);
  DegradationSpec spec = DegradationSpec::train(2, 5.0);
  Rng r1(42), r2(42);
  CHECK(max_abs_diff(degrade(hr, spec, r1), degrade(hr, spec, r2)) == 0.0);

  Tensor odd = rng.uniform_tensor({3, 15, 16}, 0.0, 1.0);
  Rng r3(1);
  CHECK_THROWS_AS(degrade(odd, spec, r3), ShapeError);
}

TEST_CASE("second-order degradation differs from first order but stays in range") {
  Rng rng(5);
  Tensor hr = rng.uniform_tensor({3, 16, 16}, 0.0, 1.0);
  DegradationSpec spec1 = DegradationSpec::train(2, 3.0, 1);
  DegradationSpec spec2 = DegradationSpec::train(2, 3.0, 2);
  Rng r1(7), r2(7);
  Tensor a = degrade(hr, spec1, r1);
  Tensor b = degrade(hr, spec2, r2);
  CHECK(a.shape() == b.shape());
  CHECK(max_abs_diff(a, b) > 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(b[i] >= 0.0);
    CHECK(b[i] <= 1.0);
  }
}

TEST_CASE("psnr sentinel, closed form, and loop oracle") {
  Tensor a = Tensor::full({3, 12, 12}, 0.3);
  CHECK(std::isinf(psnr(a, a)));

  Tensor b = Tensor::full({3, 12, 12}, 0.3 + 16.0 / 255.0);
  CHECK(std::abs(psnr(a, b) - 20.0 * std::log10(255.0 / 16.0)) <= 1e-3);

  Rng rng(6);
  Tensor x = rng.uniform_tensor({3, 12, 12}, 0.0, 1.0);
  Tensor y = rng.uniform_tensor({3, 12, 12}, 0.0, 1.0);
  const double expected = 10.0 * std::log10(1.0 / oracle::mse_loops(x, y));
  CHECK(std::abs(psnr(x, y) - expected) <= 1e-10);
  CHECK(psnr(x, y) == psnr(y, x));
  CHECK_THROWS_AS(psnr(x, Tensor({3, 12, 11})), ShapeError);
}

TEST_CASE("ssim identity, inversion, closed form, and symmetry") {
  Rng rng(7);
  Tensor a = rng.uniform_tensor({3, 16, 16}, 0.05, 0.95);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor inv = a;
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 - inv[i];
  CHECK(ssim(a, inv) < 1.0);

  Tensor c1 = Tensor::full({3, 16, 16}, 0.5);
  Tensor c2 = Tensor::full({3, 16, 16}, 0.25);
  const double c1c = 0.01 * 0.01;
  const double expected = (2.0 * 0.5 * 0.25 + c1c) / (0.5 * 0.5 + 0.25 * 0.25 + c1c);
  CHECK(std::abs(ssim(c1, c2) - expected) <= 1e-9);

  CHECK(std::abs(ssim(a, inv) - ssim(inv, a)) <= 1e-12);
  CHECK_THROWS_AS(ssim(Tensor({3, 8, 8}), Tensor({3, 8, 8})), ShapeError);
}

TEST_CASE("ppm round trip is bit exact on quantized images") {
  Rng rng(8);
  Tensor img({3, 9, 13});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform_int(0, 255) / 255.0;
  const std::string path =
      (std::filesystem::temp_directory_path() / "ta_test_img.ppm").string();
  write_ppm(path, img);
  Tensor back = read_ppm(path);
  CHECK(back.shape() == img.shape());
  CHECK(max_abs_diff(back, img) == 0.0);
  write_ppm(path, back);
  Tensor again = read_ppm(path);
  CHECK(max_abs_diff(again, back) == 0.0);
  std::filesystem::remove(path);
}
