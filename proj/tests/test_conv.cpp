#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ta/conv.hpp"
#include "ta/flops.hpp"
#include "ta/gradcheck.hpp"
#include "ta/layers.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"

#include "oracles.hpp"

using namespace ta;

TEST_CASE("depthwise delta kernel is the identity") {
  Rng rng(1);
  Tensor x = rng.uniform_tensor({3, 5, 7}, -1.0, 1.0);
  Tensor w({3, 3, 3});
  for (int c = 0; c < 3; ++c) w(c, 1, 1) = 1.0;
  CHECK(max_abs_diff(depthwise_conv2d(x, w, 1), x) == 0.0);
}

TEST_CASE("depthwise impulse response of an all-ones 3x3 kernel") {
  Tensor x({1, 5, 5});
  x(0, 2, 2) = 1.0;
  Tensor w = Tensor::full({1, 3, 3}, 1.0);
  Tensor y = depthwise_conv2d(x, w, 1);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const bool inside = std::abs(i - 2) <= 1 && std::abs(j - 2) <= 1;
      CHECK(y(0, i, j) == (inside ? 1.0 : 0.0));
    }
}

TEST_CASE("dilated 9x9 impulse support is a 49-span tap grid") {
  Rng rng(2);
  Tensor x({1, 99, 99});
  x(0, 49, 49) = 1.0;
  Tensor w = rng.uniform_tensor({1, 9, 9}, 0.1, 1.0);
  Tensor y = depthwise_conv2d(x, w, 6);
  int nonzero = 0;
  int min_i = 99, max_i = 0;
  for (int i = 0; i < 99; ++i)
    for (int j = 0; j < 99; ++j) {
      if (y(0, i, j) != 0.0) {
        ++nonzero;
        min_i = std::min(min_i, i);
        max_i = std::max(max_i, i);
        // Taps sit on the dilation-6 grid around the impulse.
        CHECK((i - 49) % 6 == 0);
        CHECK((j - 49) % 6 == 0);
        CHECK(std::abs(i - 49) <= 24);
        CHECK(std::abs(j - 49) <= 24);
      }
    }
  CHECK(nonzero == 81);
  CHECK(max_i - min_i + 1 == 49);
}

TEST_CASE("depthwise rejects even kernels and zero dilation") {
  Tensor x({1, 4, 4});
  CHECK_THROWS_AS(depthwise_conv2d(x, Tensor({1, 4, 4}), 1), ConfigError);
  CHECK_THROWS_AS(depthwise_conv2d(x, Tensor({1, 3, 3}), 0), ConfigError);
}

TEST_CASE("impulse support matches (k-1)*dilation+1 clipped at borders") {
  Rng rng(3);
  for (auto [k, dil] : {std::pair{3, 1}, {5, 1}, {3, 2}, {5, 3}, {7, 2}}) {
    const int n = 41, mid = 20;
    Tensor x({1, n, n});
    x(0, mid, mid) = 1.0;
    Tensor w = rng.uniform_tensor({1, k, k}, 0.1, 1.0);
    Tensor y = depthwise_conv2d(x, w, dil);
    const int span = (k - 1) * dil + 1;
    int count = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (y(0, i, j) != 0.0) {
          ++count;
          CHECK(std::abs(i - mid) <= (span - 1) / 2);
          CHECK(std::abs(j - mid) <= (span - 1) / 2);
        }
    CHECK(count == k * k);  // interior impulse, no clipping
  }
}

TEST_CASE("pointwise conv identity and channel sum") {
  Rng rng(4);
  Tensor x = rng.uniform_tensor({2, 3, 4}, -1.0, 1.0);
  Tensor eye({2, 2}, {1, 0, 0, 1});
  CHECK(max_abs_diff(pointwise_conv(x, eye), x) == 0.0);

  Tensor ones({1, 2}, {1, 1});
  Tensor y = pointwise_conv(x, ones);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(y(0, i, j) == doctest::Approx(x(0, i, j) + x(1, i, j)).epsilon(1e-15));
}

TEST_CASE("pointwise conv equals the per-pixel matmul oracle") {
  Rng rng(5);
  Tensor x = rng.uniform_tensor({3, 4, 5}, -1.0, 1.0);
  Tensor w = rng.uniform_tensor({4, 3}, -1.0, 1.0);
  Tensor y = pointwise_conv(x, w);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j)
      for (int co = 0; co < 4; ++co) {
        double acc = 0.0;
        for (int ci = 0; ci < 3; ++ci) acc += w(co, ci) * x(ci, i, j);
        CHECK(std::abs(y(co, i, j) - acc) <= 1e-12);
      }
}

TEST_CASE("full 3x3 conv passthrough, impulse support, and loop oracle") {
  Rng rng(6);
  Tensor x = rng.uniform_tensor({2, 5, 5}, -1.0, 1.0);
  Tensor eye({2, 2, 3, 3});
  // Center taps of the (co=0,ci=0) and (co=1,ci=1) slices.
  eye.data()[((0 * 2 + 0) * 3 + 1) * 3 + 1] = 1.0;
  eye.data()[((1 * 2 + 1) * 3 + 1) * 3 + 1] = 1.0;
  CHECK(max_abs_diff(conv2d_3x3(x, eye), x) == 0.0);

  Tensor imp({1, 7, 7});
  imp(0, 3, 3) = 1.0;
  Tensor w = rng.uniform_tensor({1, 1, 3, 3}, 0.1, 1.0);
  Tensor resp = conv2d_3x3(imp, w);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      CHECK((resp(0, i, j) != 0.0) == (std::abs(i - 3) <= 1 && std::abs(j - 3) <= 1));

  Tensor x2 = rng.uniform_tensor({2, 4, 6}, -1.0, 1.0);
  Tensor w2 = rng.uniform_tensor({2, 2, 3, 3}, -1.0, 1.0);
  CHECK(max_abs_diff(conv2d_3x3(x2, w2), oracle::conv_loops(x2, w2)) <= 1e-12);
}

TEST_CASE("strided conv halves spatial dims with ceil semantics") {
  Rng rng(7);
  Tensor w = rng.uniform_tensor({2, 2, 3, 3}, -1.0, 1.0);
  CHECK(conv2d(Tensor({2, 8, 8}), w, 2).shape() == std::vector<int>{2, 4, 4});
  CHECK(conv2d(Tensor({2, 7, 5}), w, 2).shape() == std::vector<int>{2, 4, 3});
}

TEST_CASE("pixel shuffle layout and round trip") {
  Tensor x({4, 1, 1}, {1, 2, 3, 4});
  Tensor y = pixel_shuffle(x, 2);
  CHECK(y.shape() == std::vector<int>{1, 2, 2});
  CHECK(y(0, 0, 0) == 1.0);
  CHECK(y(0, 0, 1) == 2.0);
  CHECK(y(0, 1, 0) == 3.0);
  CHECK(y(0, 1, 1) == 4.0);

  Rng rng(8);
  Tensor t = rng.uniform_tensor({8, 3, 5}, -1.0, 1.0);
  CHECK(max_abs_diff(pixel_unshuffle(pixel_shuffle(t, 2), 2), t) == 0.0);
  CHECK(max_abs_diff(pixel_shuffle(t, 1), t) == 0.0);
  CHECK_THROWS_AS(pixel_shuffle(Tensor({3, 2, 2}), 2), ShapeError);
}

TEST_CASE("channel layer norm statistics") {
  // Unit-scale channel spread keeps the epsilon dilution of the output
  // variance below 1e-6.
  Rng rng(9);
  Tensor x = rng.uniform_tensor({6, 4, 4}, -8.0, 8.0);
  Tensor gain = Tensor::full({6}, 1.0);
  Tensor bias({6});
  Tensor y = channel_layer_norm(x, gain, bias);
  for (int p = 0; p < 16; ++p) {
    const int i = p / 4, j = p % 4;
    double mu = 0.0, var = 0.0;
    for (int c = 0; c < 6; ++c) mu += y(c, i, j);
    mu /= 6.0;
    for (int c = 0; c < 6; ++c) var += (y(c, i, j) - mu) * (y(c, i, j) - mu);
    var /= 6.0;
    CHECK(std::abs(mu) <= 1e-12);
    CHECK(var >= 1.0 - 1e-6);
    CHECK(var <= 1.0 + 1e-6);
  }

  // Constant across channels: normalized value is zero, output is the bias.
  Tensor flat = Tensor::full({6, 2, 2}, 0.7);
  Tensor b2 = Tensor::full({6}, 0.25);
  Tensor y2 = channel_layer_norm(flat, gain, b2);
  for (std::size_t i = 0; i < y2.size(); ++i) CHECK(y2[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("layer norm gain and bias gradients") {
  Rng rng(10);
  LayerNormLayer ln(5);
  ln.gain.value = rng.uniform_tensor({5}, 0.5, 1.5);
  ln.bias.value = rng.uniform_tensor({5}, -0.5, 0.5);
  Tensor x = rng.uniform_tensor({5, 3, 3}, -1.0, 1.0);
  Tensor r = rng.uniform_tensor({5, 3, 3}, -1.0, 1.0);
  std::vector<Param*> params = params_of(ln);
  auto f = [&](bool backward) {
    Tensor y = ln.forward(x);
    const double loss = dot(y, r);
    if (backward) ln.backward(r);
    return loss;
  };
  CHECK(grad_check(f, params).max_rel_err <= 1e-5);
}

TEST_CASE("channel attention zero weights halve the input") {
  Rng rng(11);
  Tensor x = rng.uniform_tensor({4, 3, 3}, -1.0, 1.0);
  Tensor reduce({4, 1}), expand({1, 4});
  Tensor y = channel_attention(x, reduce, expand);
  CHECK(max_abs_diff(y, scale(x, 0.5)) <= 1e-15);
}

TEST_CASE("channel attention gates stay inside (0,1)") {
  Rng rng(12);
  Tensor x = rng.uniform_tensor({4, 5, 5}, -2.0, 2.0);
  Tensor reduce = rng.uniform_tensor({4, 1}, -2.0, 2.0);
  Tensor expand = rng.uniform_tensor({1, 4}, -2.0, 2.0);
  Tensor y = channel_attention(x, reduce, expand);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i]) <= std::abs(x[i]));
}

TEST_CASE("gdfn zero expansion gives zero output and shape is preserved") {
  Rng rng(13);
  GdfnLayer layer(4, rng);
  layer.expand.value.fill(0.0);
  Tensor x = rng.uniform_tensor({4, 4, 4}, -1.0, 1.0);
  Tensor y = layer.forward(x);
  CHECK(max_abs(y) == 0.0);
  CHECK(y.shape() == x.shape());
}

TEST_CASE("same-padding shape preservation across random configurations") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = rng.uniform_int(1, 6);
    const int h = rng.uniform_int(1, 12);
    const int w = rng.uniform_int(1, 12);
    const int k = 2 * rng.uniform_int(0, 3) + 1;
    const int dil = rng.uniform_int(1, 4);
    Tensor x = rng.uniform_tensor({c, h, w}, -1.0, 1.0);
    Tensor kern = rng.uniform_tensor({c, k, k}, -1.0, 1.0);
    CHECK(depthwise_conv2d(x, kern, dil).shape() == x.shape());
  }
}

TEST_CASE("depthwise flop accounting") {
  FlopCounter counter;
  {
    FlopScope scope(counter);
    Tensor x({3, 8, 8});
    Tensor w({3, 5, 5});
    depthwise_conv2d(x, w, 2);
  }
  CHECK(counter.multiply_adds() == 3ull * 8 * 8 * 25);
}

TEST_CASE("reflect pad and crop round trip") {
  Rng rng(15);
  Tensor x = rng.uniform_tensor({2, 5, 6}, -1.0, 1.0);
  Tensor padded = reflect_pad_br(x, 3, 2);
  CHECK(padded.shape() == std::vector<int>{2, 8, 8});
  CHECK(max_abs_diff(crop(padded, 5, 6), x) == 0.0);
  // Mirrored rows repeat interior samples, edge excluded.
  CHECK(padded(0, 5, 0) == x(0, 3, 0));
  CHECK(padded(0, 6, 0) == x(0, 2, 0));
  CHECK(padded(0, 0, 6) == x(0, 0, 4));
}
