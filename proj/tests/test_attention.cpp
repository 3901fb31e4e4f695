#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ta/attention.hpp"
#include "ta/bench.hpp"
#include "ta/flops.hpp"
#include "ta/gradcheck.hpp"
#include "ta/mlfr.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"

#include "oracles.hpp"

using namespace ta;

namespace {

// Rescales x so that A = X Wqk X^T has max-row-sum norm at most `target`.
Tensor rescale_for_norm(const Tensor& x, const QkvWeights& w, double target) {
  Tensor a = matmul(matmul(x, w.w_qk()), transpose(x));
  const double norm = oracle::max_row_sum_norm(a);
  if (norm <= target) return x;
  return scale(x, std::sqrt(target / norm) * 0.999);
}

Tensor attention_matrix(const Tensor& x, const QkvWeights& w) {
  return matmul(matmul(x, w.w_qk()), transpose(x));
}

}  // namespace

TEST_CASE("nla on zero input is zero") {
  Rng rng(1);
  QkvWeights w = QkvWeights::random(4, rng);
  Tensor x({6, 4});
  CHECK(max_abs(nla_forward(x, w)) == 0.0);
}

TEST_CASE("nla with a single row reduces to the value projection") {
  Rng rng(2);
  QkvWeights w = QkvWeights::random(5, rng);
  Tensor x = rng.uniform_tensor({1, 5}, -1.0, 1.0);
  Tensor out = nla_forward(x, w);
  Tensor xv = matmul(x, w.w_v);
  CHECK(max_abs_diff(out, xv) == 0.0);
}

TEST_CASE("nla rows stay inside the convex hull of value rows") {
  Rng rng(3);
  QkvWeights w = QkvWeights::identity(4);
  Tensor x = rng.uniform_tensor({16, 4}, -1.0, 1.0);
  Tensor out = nla_forward(x, w);
  for (int c = 0; c < 4; ++c) {
    double lo = x(0, c), hi = x(0, c);
    for (int i = 1; i < 16; ++i) {
      lo = std::min(lo, x(i, c));
      hi = std::max(hi, x(i, c));
    }
    for (int i = 0; i < 16; ++i) {
      CHECK(out(i, c) >= lo - 1e-12);
      CHECK(out(i, c) <= hi + 1e-12);
    }
  }
}

TEST_CASE("nla shape mismatch raises") {
  Rng rng(4);
  QkvWeights w = QkvWeights::random(4, rng);
  Tensor x({6, 5});
  CHECK_THROWS_AS(nla_forward(x, w), ShapeError);
}

TEST_CASE("row-normalized exponential kernel equals exact attention") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(40 + seed);
    QkvWeights w = QkvWeights::random(6, rng);
    Tensor x = rng.uniform_tensor({10, 6}, -1.0, 1.0);
    Tensor a = exp_kernel_forward_rowwise(x, w);
    Tensor b = nla_forward(x, w);
    CHECK(max_abs_diff(a, b) <= 1e-12);
  }
}

TEST_CASE("exponential kernel with scalar k deviates by at most the row-sum spread") {
  Rng rng(50);
  QkvWeights w = QkvWeights::random(4, rng);
  Tensor x = rng.uniform_tensor({8, 4}, -0.1, 0.1);
  // Brute-force row sums of exp(QK^T).
  Tensor q = matmul(x, w.w_q), kk = matmul(x, w.w_k);
  Tensor s = oracle::matmul_loops(q, transpose(kk));
  std::vector<double> row_sums(8, 0.0);
  double k_mean = 0.0;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) row_sums[i] += std::exp(s(i, j));
    k_mean += row_sums[i];
  }
  k_mean /= 8.0;

  Tensor approx = exp_kernel_forward(x, w, k_mean);
  Tensor exact = nla_forward(x, w);
  double spread = 0.0;
  for (double z : row_sums) spread = std::max(spread, std::abs(z - k_mean) / k_mean);
  for (int i = 0; i < 8; ++i) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 4; ++c) {
      num += (approx(i, c) - exact(i, c)) * (approx(i, c) - exact(i, c));
      den += exact(i, c) * exact(i, c);
    }
    CHECK(std::sqrt(num) <= spread * std::sqrt(den) + 1e-12);
  }
}

TEST_CASE("exponential kernel on zero input is zero") {
  Rng rng(55);
  QkvWeights w = QkvWeights::random(4, rng);
  Tensor x({6, 4});
  CHECK(max_abs(exp_kernel_forward(x, w, 3.0)) == 0.0);
}

TEST_CASE("nla flop count matches the closed-form audit") {
  // Projections 3Nd^2, QK^T and AttMap*V 2N^2d, softmax instrumented at
  // 3 multiply-adds per attention entry.
  Rng rng(56);
  QkvWeights w = QkvWeights::random(16, rng);
  Tensor x = rng.uniform_tensor({256, 16}, -0.25, 0.25);
  FlopCounter counter;
  {
    FlopScope scope(counter);
    nla_forward(x, w);
  }
  const std::uint64_t n = 256, d = 16;
  CHECK(counter.multiply_adds() == 3 * n * d * d + 2 * n * n * d + 3 * n * n);
}

TEST_CASE("exponential kernel overflow guard") {
  Rng rng(60);
  QkvWeights w = QkvWeights::identity(2);
  Tensor x({2, 2}, {8.0, 8.0, 8.0, 8.0});  // QK^T entries = 128 > 30
  CHECK_THROWS_AS(exp_kernel_forward(x, w, 1.0), NumericError);
}

TEST_CASE("taylor reference collapses to the identity term when Wqk is zero") {
  Rng rng(70);
  QkvWeights w = QkvWeights::random(4, rng);
  w.w_q.fill(0.0);  // Wqk = 0, A = 0
  Tensor x = rng.uniform_tensor({6, 4}, -1.0, 1.0);
  const double k = 3.0;
  Tensor out = taylor_attention_reference(x, w, TaylorOrder(1), k);
  Tensor expected = scale(matmul(x, w.w_v), 1.0 / k);
  CHECK(max_abs_diff(out, expected) <= 1e-15);
}

TEST_CASE("taylor order 2 equals order 1 plus the quadratic term") {
  Rng rng(71);
  QkvWeights w = QkvWeights::random(4, rng);
  Tensor x = rng.uniform_tensor({7, 4}, -0.5, 0.5);
  const double k = 2.0;
  Tensor o1 = taylor_attention_reference(x, w, TaylorOrder(1), k);
  Tensor o2 = taylor_attention_reference(x, w, TaylorOrder(2), k);
  Tensor a = attention_matrix(x, w);
  Tensor quad = scale(matmul(matmul(a, a), matmul(x, w.w_v)), 1.0 / (2.0 * k));
  CHECK(max_abs_diff(o2, add(o1, quad)) <= 1e-12);
}

TEST_CASE("truncation error shrinks with order against the matrix exponential") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(80 + seed);
    QkvWeights w = QkvWeights::random(4, rng);
    Tensor x = rescale_for_norm(rng.uniform_tensor({12, 4}, -1.0, 1.0), w, 0.1);
    Tensor a = attention_matrix(x, w);
    REQUIRE(oracle::max_row_sum_norm(a) <= 0.1);
    const double k = 5.0;
    Tensor v = matmul(x, w.w_v);
    Tensor exact = scale(oracle::matmul_loops(oracle::matrix_exp_series(a), v), 1.0 / k);
    const double e1 = rel_frobenius(taylor_attention_reference(x, w, TaylorOrder(1), k), exact);
    const double e2 = rel_frobenius(taylor_attention_reference(x, w, TaylorOrder(2), k), exact);
    const double e3 = rel_frobenius(taylor_attention_reference(x, w, TaylorOrder(3), k), exact);
    CHECK(e3 <= e2);
    CHECK(e2 <= e1);
  }
}

TEST_CASE("taylor remainder bound for order 2") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(90 + seed);
    QkvWeights w = QkvWeights::random(4, rng);
    Tensor x = rescale_for_norm(rng.uniform_tensor({10, 4}, -1.0, 1.0), w, 0.1);
    Tensor a = attention_matrix(x, w);
    const double norm1 = oracle::max_row_sum_norm(a);
    REQUIRE(norm1 <= 0.1);
    Tensor expm = oracle::matrix_exp_series(a);
    // T2 = I + A + A^2/2
    Tensor t2 = oracle::matmul_loops(a, a);
    for (std::size_t i = 0; i < t2.size(); ++i) t2[i] = 0.5 * t2[i] + a[i];
    for (int i = 0; i < a.rows(); ++i) t2(i, i) += 1.0;
    const double bound = norm1 * norm1 * norm1 / 6.0 * std::exp(norm1);
    CHECK(max_abs_diff(expm, t2) <= bound);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("linear rearrangement matches the quadratic reference") {
  for (int order = 1; order <= 3; ++order) {
    for (int n : {1, 2, 8, 32}) {
      for (int d : {1, 4, 8}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          Rng rng(1000 + 97 * static_cast<std::uint64_t>(order) + 13 * n + d + seed);
          QkvWeights w = QkvWeights::random(d, rng);
          Tensor x = rng.uniform_tensor({n, d}, -1.0, 1.0);
          const double k = static_cast<double>(n);
          Tensor ref = taylor_attention_reference(x, w, TaylorOrder(order), k);
          Tensor lin = taylor_attention_linear(x, w, TaylorOrder(order), k);
          CHECK(rel_frobenius(lin, ref, 1e-30) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("linear form on zero input is zero") {
  Rng rng(110);
  QkvWeights w = QkvWeights::random(4, rng);
  Tensor x({8, 4});
  CHECK(max_abs(taylor_attention_linear(x, w, TaylorOrder(2), 2.0)) == 0.0);
}

TEST_CASE("linear form never pays the quadratic flop bill") {
  Rng rng(111);
  QkvWeights w = QkvWeights::random(16, rng);
  Tensor x = rng.uniform_tensor({1024, 16}, -0.25, 0.25);

  FlopCounter ref_counter, lin_counter;
  {
    FlopScope scope(ref_counter);
    taylor_attention_reference(x, w, TaylorOrder(3), 7.0);
  }
  {
    FlopScope scope(lin_counter);
    taylor_attention_linear(x, w, TaylorOrder(3), 7.0);
  }
  CHECK(ref_counter.multiply_adds() >= 50 * lin_counter.multiply_adds());
}

TEST_CASE("diagonalized form agrees with the factor-aligned linear form") {
  // The literal derivation has no 1/2! on the quadratic term, so it equals
  // 2*L2 - L1 where L_k are the factorial-keeping truncations.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(120 + seed);
    QkvWeights w = QkvWeights::random(8, rng);
    Tensor x = rng.uniform_tensor({16, 8}, -1.0, 1.0);
    const double k = 4.0;
    Tensor diag = diagonalized_form(x, w, k);
    Tensor l1 = taylor_attention_linear(x, w, TaylorOrder(1), k);
    Tensor l2 = taylor_attention_linear(x, w, TaylorOrder(2), k);
    Tensor aligned = sub(scale(l2, 2.0), l1);
    CHECK(rel_frobenius(diag, aligned) <= 1e-8);
  }
}

TEST_CASE("diagonalized form with orthonormal columns hits the closed form") {
  // Gram-Schmidt on a random 16x4 gives X with X^T X = I.
  Rng rng(130);
  Tensor x = rng.uniform_tensor({16, 4}, -1.0, 1.0);
  for (int c = 0; c < 4; ++c) {
    for (int prev = 0; prev < c; ++prev) {
      double proj = 0.0;
      for (int i = 0; i < 16; ++i) proj += x(i, c) * x(i, prev);
      for (int i = 0; i < 16; ++i) x(i, c) -= proj * x(i, prev);
    }
    double norm = 0.0;
    for (int i = 0; i < 16; ++i) norm += x(i, c) * x(i, c);
    norm = std::sqrt(norm);
    for (int i = 0; i < 16; ++i) x(i, c) /= norm;
  }
  QkvWeights w = QkvWeights::random(4, rng);
  const double k = 3.0;
  Tensor wqk = w.w_qk();
  Tensor m = w.w_v;
  axpy(1.0, matmul(wqk, w.w_v), m);
  axpy(1.0, matmul(wqk, matmul(wqk, w.w_v)), m);
  Tensor expected = scale(matmul(x, m), 1.0 / k);
  CHECK(rel_frobenius(diagonalized_form(x, w, k), expected) <= 1e-9);
}

TEST_CASE("diagonalized form with d=1 reduces to scalar arithmetic") {
  Rng rng(131);
  Tensor x = rng.uniform_tensor({7, 1}, -1.0, 1.0);
  QkvWeights w = QkvWeights::random(1, rng);
  const double k = 2.0;
  double g = 0.0;
  for (int i = 0; i < 7; ++i) g += x(i, 0) * x(i, 0);  // B = ||x||^2, Z = [1]
  const double wqk = w.w_q(0, 0) * w.w_k(0, 0);
  const double wv = w.w_v(0, 0);
  const double factor = (wv + wqk * g * wv + wqk * g * wqk * g * wv) / k;
  Tensor out = diagonalized_form(x, w, k);
  for (int i = 0; i < 7; ++i) CHECK(out(i, 0) == doctest::Approx(x(i, 0) * factor).epsilon(1e-12));
}

TEST_CASE("eigen extractor zero input and single-row pooling") {
  Rng rng(140);
  EigenExtractor e(6, rng);
  Tensor zero({4, 6});
  CHECK(max_abs(e.forward(zero)) == 0.0);

  Tensor one_row = rng.uniform_tensor({1, 6}, -1.0, 1.0);
  Tensor b = e.forward(one_row);
  Tensor manual = matmul(relu(matmul(one_row, e.m1.value)), e.m2.value);
  CHECK(max_abs_diff(b.reshaped({1, 6}), manual) == 0.0);
}

TEST_CASE("stea collapses to the value path when the chain blocks are zero") {
  Rng rng(150);
  SteaUnit unit(4, 2, true, rng, 8.0);
  for (auto& blk : unit.blocks) {
    blk.a.value.fill(0.0);
    blk.b.value.fill(0.0);
  }
  unit.dwc_kernel.value.fill(0.0);
  for (int c = 0; c < 4; ++c) unit.dwc_kernel.value(c, 1, 1) = 1.0;  // centered delta

  Tensor x = rng.uniform_tensor({4, 3, 3}, -1.0, 1.0);
  Tensor out = unit.forward(x);
  Tensor expected = nd_to_chw(scale(matmul(chw_to_nd(x), unit.w_v.value), 1.0 / unit.k()), 3, 3);
  CHECK(max_abs_diff(out, expected) <= 1e-15);
}

TEST_CASE("stea preserves the feature map shape") {
  for (auto [c, h, w] : {std::tuple{8, 4, 4}, std::tuple{16, 7, 5}}) {
    Rng rng(151);
    SteaUnit unit(c, 2, true, rng);
    Tensor x = rng.uniform_tensor({c, h, w}, -1.0, 1.0);
    Tensor out = unit.forward(x);
    CHECK(out.shape() == x.shape());
  }
}

TEST_CASE("stea rejects mismatched channel counts") {
  Rng rng(152);
  SteaUnit unit(4, 2, true, rng);
  Tensor x({3, 4, 4});
  CHECK_THROWS_AS(unit.forward(x), ShapeError);
}

TEST_CASE("full stea unit passes a gradient check") {
  Rng rng(153);
  SteaUnit unit(4, 2, true, rng, 16.0);
  Rng data_rng(154);
  Tensor x = data_rng.uniform_tensor({4, 4, 4}, -1.0, 1.0);
  Tensor r = data_rng.uniform_tensor({4, 4, 4}, -1.0, 1.0);
  std::vector<Param*> params = params_of(unit);
  auto f = [&](bool backward) {
    Tensor y = unit.forward(x);
    const double loss = dot(y, r);
    if (backward) unit.backward(r);
    return loss;
  };
  GradCheckReport rep = grad_check(f, params);
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("qkv parameter count arithmetic") {
  Rng rng(160);
  QkvWeights w = QkvWeights::random(8, rng);
  CHECK(w.param_count() == 192);
}

TEST_CASE("unit parameter counts follow the ablation ordering") {
  Rng rng(161);
  SteaUnit ftea(16, 1, false, rng);
  SteaUnit ftea_dwc(16, 1, true, rng);
  SteaUnit stea(16, 2, true, rng);
  SteaUnit ttea(16, 3, true, rng);
  CHECK(ftea.param_count() < ftea_dwc.param_count());
  CHECK(ftea_dwc.param_count() < stea.param_count());
  CHECK(stea.param_count() < ttea.param_count());

  MlfrBlock v1(16, MlfrVariant(1), rng);
  MlfrBlock v2(16, MlfrVariant(2), rng);
  MlfrBlock v3(16, MlfrVariant(3), rng);
  CHECK(v1.param_count() < v2.param_count());
  CHECK(v2.param_count() < v3.param_count());
}

TEST_CASE("bench flop counts are exact functions of kernel, n, and d") {
  for (const std::string kernel : {"nla", "exp", "taylor-linear", "stea", "mlfr"}) {
    BenchRecord a = run_bench_kernel(kernel, 64, 8, 1);
    BenchRecord b = run_bench_kernel(kernel, 64, 8, 999);
    CHECK(a.flops == b.flops);
    CHECK(a.flops > 0);
    CHECK(a.wall_ns > 0);
  }
}

TEST_CASE("softmax lifts the rank of the attention matrix") {
  Rng rng(170);
  QkvWeights w = QkvWeights::random(8, rng);
  Tensor x = rng.uniform_tensor({32, 8}, -1.0, 1.0);
  Tensor q = matmul(x, w.w_q), kk = matmul(x, w.w_k);
  Tensor qkt = matmul(q, transpose(kk));

  std::vector<double> sv = oracle::singular_values(qkt);
  int above = 0;
  for (double s : sv)
    if (s > 1e-10 * sv[0]) ++above;
  CHECK(above <= 8);

  std::vector<double> sv_soft = oracle::singular_values(row_softmax(qkt));
  int above_soft = 0;
  for (double s : sv_soft)
    if (s > 1e-10 * sv_soft[0]) ++above_soft;
  CHECK(above_soft >= 9);
}
