#pragma once

#include <vector>

#include "modeconnect/matrix.hpp"

namespace mc {

/// Thin singular value decomposition a = u * diag(s) * vT with
/// k = min(rows, cols) singular values in non-increasing order and
/// orthonormal columns in u (rows x k) and v (cols x k).
struct SvdResult {
  Matrix u;
  std::vector<double> s;
  Matrix vT;  // k x cols

  Matrix reconstruct() const;
};

/// One-sided Jacobi SVD (with a Householder QR step for tall or wide
/// inputs). Throws NumericalError with the sweep count if the rotation
/// sweeps fail to converge.
SvdResult svd(const Matrix& a);

/// Moore-Penrose pseudo-inverse. Singular values at or below
/// rcond * max(rows, cols) * s_max are truncated to zero.
Matrix pseudo_inverse(const Matrix& a, double rcond = 1e-10);

}  // namespace mc
