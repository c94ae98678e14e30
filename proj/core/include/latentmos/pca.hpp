#pragma once

#include <vector>

#include "latentmos/tensor.hpp"

namespace lmos {

/// Two-component PCA fitted by cyclic Jacobi eigendecomposition of the
/// covariance matrix. Deterministic for a fixed input order; components are
/// ordered by descending explained variance and signed so the
/// largest-magnitude loading is positive.
struct Pca2 {
  Tensor mean;                           // dim
  Tensor components;                     // 2 x dim, rows orthonormal
  std::vector<double> explained_ratio;   // per component, of total variance
};

/// Fits on the given points (each a rank-1 tensor of equal dimension).
/// Throws DegeneracyError when the total variance vanishes and
/// DimensionError on ragged or empty input.
Pca2 pca_fit_2d(const std::vector<Tensor>& points);

/// Projects one point onto the two components.
Tensor pca_project(const Pca2& pca, const Tensor& point);

/// Reconstruction from the 2D projection back into the original space.
Tensor pca_reconstruct(const Pca2& pca, const Tensor& projected);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with matching unit eigenvectors
/// as rows of `vectors`.
struct SymmetricEigen {
  std::vector<double> values;
  Tensor vectors;  // n x n, row i pairs with values[i]
};
SymmetricEigen jacobi_eigen(const Tensor& sym);

}  // namespace lmos
