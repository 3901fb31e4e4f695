#pragma once

#include "ta/tensor.hpp"

namespace ta {

// Dense kernels shared by every module. All rank-2 operands are (rows x cols)
// row-major. Each differentiable operation has a *_backward companion that
// implements the vector-Jacobian product for the forward map.

Tensor matmul(const Tensor& a, const Tensor& b);
// dC -> (dA, dB): dA = dC * B^T, dB = A^T * dC. Accumulates into da/db.
void matmul_backward(const Tensor& dc, const Tensor& a, const Tensor& b, Tensor& da, Tensor& db);

Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
void axpy(double s, const Tensor& x, Tensor& acc);  // acc += s * x

// Multiply column j of a (m x n) by v[j] (length n). Used for diagonal
// matrices applied from the right.
Tensor scale_columns(const Tensor& a, const Tensor& v);
void scale_columns_backward(const Tensor& dy, const Tensor& a, const Tensor& v, Tensor& da,
                            Tensor& dv);

Tensor relu(const Tensor& a);
Tensor relu_backward(const Tensor& dy, const Tensor& x);

Tensor gelu(const Tensor& a);
Tensor gelu_backward(const Tensor& dy, const Tensor& x);

Tensor logistic(const Tensor& a);
Tensor logistic_backward(const Tensor& dy, const Tensor& y);

// Elementwise exp; throws NumericError if any |entry| exceeds `guard`.
Tensor exp_elementwise(const Tensor& a, double guard);

// Numerically stable per-row softmax of a rank-2 tensor.
Tensor row_softmax(const Tensor& a);
Tensor row_softmax_backward(const Tensor& dy, const Tensor& y);

// Mean over rows of an (n x d) tensor -> (1 x d).
Tensor mean_rows(const Tensor& a);

double sum(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& a);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
// Relative Frobenius distance ||a - b||_F / max(||b||_F, floor).
double rel_frobenius(const Tensor& a, const Tensor& b, double floor = 1e-300);
bool all_finite(const Tensor& a);

}  // namespace ta
