#pragma once

#include "latentmos/tape.hpp"
#include "latentmos/tensor.hpp"

namespace lmos {

/// 2x2 rotation generator [[0,-1],[1,0]].
Tensor spin2();

/// Reciprocal of a strictly positive scalar, assembled as exp(-log x) so the
/// op set stays closed.
Var recip_pos(const Var& x);

/// Gram-Schmidt on the two columns of an m x 2 matrix. Differentiable.
/// Throws DegeneracyError (with a condition estimate) when the columns are
/// numerically dependent.
Var orthonormalize_pair(const Var& v);

/// Matrix exponential by scaling and squaring around a fixed-order Taylor
/// core. The operand is scaled until its max-abs entry norm drops below 0.25,
/// keeping truncation well under the verification tolerances. Differentiable.
Var matrix_exp(const Var& x);

/// exp(theta * spin2()); theta is a scalar (any shape with one element).
Var rotation2(const Var& theta);

/// I_m + P (R - I_2) P^T for an orthonormal m x 2 basis P: rotation by theta
/// in the plane spanned by the basis columns.
Var plane_rotation(const Var& basis, const Var& theta);

/// Embed an m x m block into the top-left of an (m+1)x(m+1) homogeneous
/// generator, built from matmuls with constant selectors so it stays
/// differentiable.
Var pad_linear_block(const Var& a);

/// Embed an m-vector into the last column (rows 0..m-1) of an (m+1)x(m+1)
/// homogeneous generator.
Var pad_offset_block(const Var& v);

// Value-level conveniences over the same implementations.
Tensor matrix_exp_value(const Tensor& x);
Tensor orthonormalize_pair_value(const Tensor& v);

}  // namespace lmos
