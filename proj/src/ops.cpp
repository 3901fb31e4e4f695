#include "ta/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ta/flops.hpp"

namespace ta {

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + t.shape_str());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const int m = a.rows(), p = a.cols(), n = b.cols();
  if (b.rows() != p) {
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " + b.shape_str());
  }
  Tensor c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (int i = 0; i < m; ++i) {
    const double* arow = pa + static_cast<std::size_t>(i) * p;
    double* crow = pc + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < p; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = pb + static_cast<std::size_t>(k) * n;
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  count_flops(static_cast<std::uint64_t>(m) * n * p);
  return c;
}

void matmul_backward(const Tensor& dc, const Tensor& a, const Tensor& b, Tensor& da, Tensor& db) {
  // dA = dC * B^T
  const int m = a.rows(), p = a.cols(), n = b.cols();
  if (dc.rows() != m || dc.cols() != n) {
    throw ShapeError("matmul_backward: dC shape " + dc.shape_str() + " does not match product");
  }
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < p; ++k) {
      double acc = 0.0;
      const double* dcrow = dc.data() + static_cast<std::size_t>(i) * n;
      const double* brow = b.data() + static_cast<std::size_t>(k) * n;
      for (int j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      da(i, k) += acc;
    }
  }
  // dB = A^T * dC
  for (int k = 0; k < p; ++k) {
    double* dbrow = db.data() + static_cast<std::size_t>(k) * n;
    for (int i = 0; i < m; ++i) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* dcrow = dc.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) dbrow[j] += aik * dcrow[j];
    }
  }
  count_flops(2ull * static_cast<std::uint64_t>(m) * n * p);
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  Tensor t({a.cols(), a.rows()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  count_flops(a.size());
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  count_flops(a.size());
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
  count_flops(a.size());
  return c;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  count_flops(a.size());
  return c;
}

void axpy(double s, const Tensor& x, Tensor& acc) {
  require_same_shape(x, acc, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] += s * x[i];
  count_flops(x.size());
}

Tensor scale_columns(const Tensor& a, const Tensor& v) {
  require_rank2(a, "scale_columns");
  if (static_cast<int>(v.size()) != a.cols()) {
    throw ShapeError("scale_columns: vector length " + std::to_string(v.size()) +
                     " vs columns " + std::to_string(a.cols()));
  }
  Tensor c = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) *= v[static_cast<std::size_t>(j)];
  count_flops(a.size());
  return c;
}

void scale_columns_backward(const Tensor& dy, const Tensor& a, const Tensor& v, Tensor& da,
                            Tensor& dv) {
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      da(i, j) += dy(i, j) * v[static_cast<std::size_t>(j)];
      dv[static_cast<std::size_t>(j)] += dy(i, j) * a(i, j);
    }
  }
}

Tensor relu(const Tensor& a) {
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = c[i] > 0.0 ? c[i] : 0.0;
  count_flops(a.size());
  return c;
}

Tensor relu_backward(const Tensor& dy, const Tensor& x) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (x[i] <= 0.0) dx[i] = 0.0;
  return dx;
}

Tensor gelu(const Tensor& a) {
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = 0.5 * a[i] * (1.0 + std::erf(a[i] * M_SQRT1_2));
  }
  count_flops(a.size());
  return c;
}

Tensor gelu_backward(const Tensor& dy, const Tensor& x) {
  Tensor dx = dy;
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double cdf = 0.5 * (1.0 + std::erf(x[i] * M_SQRT1_2));
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
    dx[i] = dy[i] * (cdf + x[i] * pdf);
  }
  return dx;
}

Tensor logistic(const Tensor& a) {
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 1.0 / (1.0 + std::exp(-a[i]));
  count_flops(a.size());
  return c;
}

Tensor logistic_backward(const Tensor& dy, const Tensor& y) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
  return dx;
}

Tensor exp_elementwise(const Tensor& a, double guard) {
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(std::abs(a[i]) <= guard)) {
      throw NumericError("exp_elementwise: |entry| = " + std::to_string(a[i]) +
                         " exceeds guard " + std::to_string(guard) + "; rescale inputs");
    }
    c[i] = std::exp(a[i]);
  }
  count_flops(a.size());
  return c;
}

Tensor row_softmax(const Tensor& a) {
  require_rank2(a, "row_softmax");
  if (!all_finite(a)) throw NumericError("row_softmax: non-finite input");
  Tensor y({a.rows(), a.cols()});
  const int n = a.cols();
  for (int i = 0; i < a.rows(); ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * n;
    double* out = y.data() + static_cast<std::size_t>(i) * n;
    double m = row[0];
    for (int j = 1; j < n; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      out[j] = std::exp(row[j] - m);
      z += out[j];
    }
    const double inv = 1.0 / z;
    for (int j = 0; j < n; ++j) out[j] *= inv;
  }
  count_flops(3ull * a.size());
  return y;
}

Tensor row_softmax_backward(const Tensor& dy, const Tensor& y) {
  // dx_j = y_j * (dy_j - sum_k dy_k y_k) per row
  Tensor dx({y.rows(), y.cols()});
  const int n = y.cols();
  for (int i = 0; i < y.rows(); ++i) {
    const double* yr = y.data() + static_cast<std::size_t>(i) * n;
    const double* dr = dy.data() + static_cast<std::size_t>(i) * n;
    double* xr = dx.data() + static_cast<std::size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += dr[j] * yr[j];
    for (int j = 0; j < n; ++j) xr[j] = yr[j] * (dr[j] - s);
  }
  return dx;
}

Tensor mean_rows(const Tensor& a) {
  require_rank2(a, "mean_rows");
  Tensor m({1, a.cols()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(0, j) += a(i, j);
  const double inv = 1.0 / a.rows();
  for (int j = 0; j < a.cols(); ++j) m(0, j) *= inv;
  count_flops(a.size());
  return m;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  return s;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  count_flops(a.size());
  return s;
}

double frobenius_norm(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double rel_frobenius(const Tensor& a, const Tensor& b, double floor) {
  require_same_shape(a, b, "rel_frobenius");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

bool all_finite(const Tensor& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

}  // namespace ta
