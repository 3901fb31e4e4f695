#include "ta/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ta/ops.hpp"

namespace ta {

namespace {

double off_diagonal_norm(const Tensor& a) {
  double s = 0.0;
  const int d = a.rows();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition symmetric_eigendecompose(const Tensor& s) {
  if (s.rank() != 2 || s.rows() != s.cols()) {
    throw ShapeError("symmetric_eigendecompose: expected square matrix, got " + s.shape_str());
  }
  const int d = s.rows();
  double asym = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) asym = std::max(asym, std::abs(s(i, j) - s(j, i)));
  if (asym > 1e-9) {
    throw NumericError("symmetric_eigendecompose: input asymmetric, ||S - S^T||_max = " +
                       std::to_string(asym));
  }

  Tensor a = s;
  // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) a(j, i) = a(i, j);

  Tensor z({d, d});
  for (int i = 0; i < d; ++i) z(i, i) = 1.0;

  const double scale = frobenius_norm(a);
  const double tol = 1e-14 * std::max(scale, 1e-300);

  int sweep = 0;
  while (off_diagonal_norm(a) > tol) {
    if (++sweep > 100) {
      throw ConvergenceError("symmetric_eigendecompose: no convergence after 100 sweeps");
    }
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol / (d * d)) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;

        // A <- J^T A J on rows/columns p, q.
        for (int k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double zkp = z(k, p), zkq = z(k, q);
          z(k, p) = c * zkp - sn * zkq;
          z(k, q) = sn * zkp + c * zkq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](int i, int j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{Tensor({d, d}), Tensor({d})};
  for (int j = 0; j < d; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    out.eigenvalues[static_cast<std::size_t>(j)] = a(src, src);
    for (int i = 0; i < d; ++i) out.eigenvectors(i, j) = z(i, src);
  }
  return out;
}

}  // namespace ta
