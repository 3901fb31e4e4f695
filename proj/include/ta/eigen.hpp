#pragma once

#include <utility>

#include "ta/tensor.hpp"

namespace ta {

struct EigenDecomposition {
  Tensor eigenvectors;  // (d x d), columns are eigenvectors
  Tensor eigenvalues;   // (d), sorted descending
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Input must satisfy ||S - S^T||_max <= 1e-9. Throws NumericError on
// asymmetric input and ConvergenceError after 100 sweeps.
EigenDecomposition symmetric_eigendecompose(const Tensor& s);

}  // namespace ta
