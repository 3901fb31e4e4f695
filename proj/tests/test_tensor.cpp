#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ta/eigen.hpp"
#include "ta/flops.hpp"
#include "ta/gradcheck.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"
#include "ta/tensor.hpp"
#include "ta/tensor_io.hpp"

#include "oracles.hpp"

using namespace ta;

TEST_CASE("tensor shape invariants") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(t.reshaped({5}), ShapeError);
  Tensor r = t.reshaped({3, 2});
  CHECK(r.rows() == 3);
}

TEST_CASE("matmul identity and hand arithmetic") {
  Rng rng(1);
  Tensor m = rng.uniform_tensor({2, 2}, -2.0, 2.0);
  Tensor eye({2, 2}, {1, 0, 0, 1});
  CHECK(max_abs_diff(matmul(eye, m), m) == 0.0);

  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {0, 1});
  Tensor c = matmul(a, b);
  CHECK(c(0, 0) == 2.0);
  CHECK(c(1, 0) == 4.0);
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(7);
  Tensor a = rng.uniform_tensor({8, 4}, -1.0, 1.0);
  Tensor b = rng.uniform_tensor({4, 8}, -1.0, 1.0);
  CHECK(max_abs_diff(matmul(a, b), oracle::matmul_loops(a, b)) <= 1e-12);
}

TEST_CASE("matmul shape error names both shapes") {
  Tensor a({2, 3}), b({4, 2});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2, 3)") != std::string::npos);
    CHECK(msg.find("(4, 2)") != std::string::npos);
  }
}

TEST_CASE("matmul associativity") {
  Rng rng(13);
  Tensor a = rng.uniform_tensor({16, 16}, -1.0, 1.0);
  Tensor b = rng.uniform_tensor({16, 16}, -1.0, 1.0);
  Tensor c = rng.uniform_tensor({16, 16}, -1.0, 1.0);
  CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-9 * 16.0);
}

TEST_CASE("flop counter counts matmul exactly and ignores disabled state") {
  FlopCounter counter;
  {
    FlopScope scope(counter);
    Tensor a({5, 3}), b({3, 7});
    matmul(a, b);
  }
  CHECK(counter.multiply_adds() == 5ull * 7 * 3);

  counter.set_enabled(false);
  {
    FlopScope scope(counter);
    Tensor a({5, 3}), b({3, 7});
    matmul(a, b);
  }
  CHECK(counter.multiply_adds() == 5ull * 7 * 3);
}

TEST_CASE("row softmax basics") {
  Tensor zeros({3, 5});
  Tensor u = row_softmax(zeros);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == doctest::Approx(0.2).epsilon(1e-15));

  Tensor row({1, 2}, {0.0, std::log(3.0)});
  Tensor s = row_softmax(row);
  CHECK(s(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(0.75).epsilon(1e-14));

  Rng rng(3);
  Tensor x = rng.uniform_tensor({6, 6}, -4.0, 4.0);
  Tensor y = row_softmax(x);
  for (int i = 0; i < 6; ++i) {
    double total = 0.0;
    for (int j = 0; j < 6; ++j) total += y(i, j);
    CHECK(std::abs(total - 1.0) <= 1e-14);
  }

  Tensor bad({1, 2}, {1.0, std::nan("")});
  CHECK_THROWS_AS(row_softmax(bad), NumericError);
}

TEST_CASE("grad_check on a quadratic") {
  Param theta(Tensor({3}, {1.0, 2.0, 3.0}), "theta");
  auto f = [&](bool backward) {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += theta.value[i] * theta.value[i];
    if (backward) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta.grad[i] += 2.0 * theta.value[i];
    }
    return s;
  };
  GradCheckReport rep = grad_check(f, {&theta});
  CHECK(rep.max_rel_err < 1e-9);
  CHECK(rep.coords_checked == 3);
}

TEST_CASE("grad_check flags nondeterminism") {
  Param p(Tensor({1}, {1.0}), "p");
  int calls = 0;
  auto f = [&](bool) { return static_cast<double>(++calls); };
  CHECK_THROWS_AS(grad_check(f, {&p}), NumericError);
}

TEST_CASE("grad_check of softmax composition stays under 1e-5") {
  Rng rng(11);
  Param w(rng.uniform_tensor({4, 4}, -1.0, 1.0), "w");
  Tensor x = rng.uniform_tensor({4, 4}, -1.0, 1.0);
  // The plain sum of softmax rows is constant; the check must still agree
  // with the (zero) numeric gradient.
  auto f = [&](bool backward) {
    Tensor y = row_softmax(matmul(w.value, x));
    if (backward) {
      Tensor dy = Tensor::full(y.shape(), 1.0);
      Tensor dwx = row_softmax_backward(dy, y);
      Tensor dx_unused(x.shape());
      matmul_backward(dwx, w.value, x, w.grad, dx_unused);
    }
    return sum(y);
  };
  GradCheckReport rep = grad_check(f, {&w});
  CHECK(rep.max_rel_err < 1e-5);
}

TEST_CASE("jacobi eigensolver on already-diagonal and textbook inputs") {
  Tensor d({2, 2}, {3, 0, 0, 1});
  EigenDecomposition e1 = symmetric_eigendecompose(d);
  CHECK(e1.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e1.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(std::abs(e1.eigenvectors(0, 0)) - 1.0) <= 1e-12);
  CHECK(std::abs(std::abs(e1.eigenvectors(1, 1)) - 1.0) <= 1e-12);

  Tensor s({2, 2}, {2, 1, 1, 2});
  EigenDecomposition e2 = symmetric_eigendecompose(s);
  CHECK(e2.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e2.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(e2.eigenvectors(0, 0)) - inv_sqrt2) <= 1e-12);
  CHECK(std::abs(std::abs(e2.eigenvectors(1, 0)) - inv_sqrt2) <= 1e-12);
}

TEST_CASE("jacobi eigensolver reconstructs random gram matrices") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    Tensor x = rng.uniform_tensor({16, 8}, -1.0, 1.0);
    Tensor g = matmul(transpose(x), x);
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j) g(j, i) = g(i, j);
    EigenDecomposition e = symmetric_eigendecompose(g);

    Tensor zb = scale_columns(e.eigenvectors, e.eigenvalues);
    Tensor rec = matmul(zb, transpose(e.eigenvectors));
    CHECK(rel_frobenius(rec, g) <= 1e-10);

    Tensor ztz = matmul(transpose(e.eigenvectors), e.eigenvectors);
    for (int i = 0; i < 8; ++i) ztz(i, i) -= 1.0;
    CHECK(frobenius_norm(ztz) <= 1e-8 * 8);

    for (int i = 0; i + 1 < 8; ++i) CHECK(e.eigenvalues[i] >= e.eigenvalues[i + 1]);
  }
}

TEST_CASE("jacobi eigensolver rejects asymmetric input and handles d=1") {
  Tensor bad({2, 2}, {1.0, 2.0, 0.0, 1.0});
  CHECK_THROWS_AS(symmetric_eigendecompose(bad), NumericError);

  Tensor scalar({1, 1}, {4.2});
  EigenDecomposition e = symmetric_eigendecompose(scalar);
  CHECK(e.eigenvalues[0] == 4.2);
  CHECK(e.eigenvectors(0, 0) == 1.0);
}

TEST_CASE("tensor binary round trip") {
  Rng rng(5);
  Tensor t = rng.uniform_tensor({3, 4, 5}, -10.0, 10.0);
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  dump_tensor(ss, t);
  CHECK(ss.str().size() == tensor_record_size(t));
  CHECK(ss.str().substr(0, 4) == "TNSR");
  Tensor back = load_tensor(ss);
  CHECK(back.shape() == t.shape());
  CHECK(max_abs_diff(back, t) == 0.0);

  std::stringstream bad("nope", std::ios::in | std::ios::binary);
  CHECK_THROWS_AS(load_tensor(bad), IoError);
}
