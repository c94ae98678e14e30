#include "latentmos/linops.hpp"

#include <cmath>
#include <string>

#include "latentmos/error.hpp"

namespace lmos {

Tensor spin2() { return Tensor::matrix(2, 2, {0.0, -1.0, 1.0, 0.0}); }

Var recip_pos(const Var& x) { return exp(sub(constant(0.0), log(x))); }

Var orthonormalize_pair(const Var& v) {
  if (v.val().rank() != 2 || v.val().cols() != 2)
    throw DimensionError("orthonormalize_pair needs an m x 2 matrix, got " + v.val().shape_str());
  const int m = v.val().rows();
  if (m < 2) throw DimensionError("orthonormalize_pair needs m >= 2");

  // Columns as contiguous slices of the transpose.
  Var vt = reshape(transpose(v), {2 * m});
  Var c1 = slice(vt, 0, m);
  Var c2 = slice(vt, m, m);

  Var r1 = norm2(c1);
  const double len1 = r1.val()[0];
  const double len2 = norm2(c2).val()[0];
  if (len1 < 1e-12 || len2 < 1e-12)
    throw DegeneracyError("orthonormalize_pair: column norm " +
                          std::to_string(std::min(len1, len2)) + " below 1e-12");
  Var u1 = mul(c1, recip_pos(r1));

  Var proj = sum(mul(u1, c2));
  Var w = sub(c2, mul(u1, proj));
  Var r2 = norm2(w);
  const double ratio = r2.val()[0] / len2;
  if (ratio < 1e-8)
    throw DegeneracyError("orthonormalize_pair: columns numerically dependent, condition ~" +
                          std::to_string(ratio > 0.0 ? 1.0 / ratio : HUGE_VAL));
  Var u2 = mul(w, recip_pos(r2));

  return transpose(reshape(concat(u1, u2), {2, m}));
}

Var matrix_exp(const Var& x) {
  if (x.val().rank() != 2 || x.val().rows() != x.val().cols())
    throw DimensionError("matrix_exp needs a square matrix, got " + x.val().shape_str());
  const int n = x.val().rows();
  const double a = x.val().max_abs() * n;  // cheap norm bound
  if (!std::isfinite(a)) throw DomainError("matrix_exp on non-finite input");

  int squarings = 0;
  double scaled = a;
  while (scaled >= 0.25 && squarings < 64) {
    scaled *= 0.5;
    ++squarings;
  }
  if (scaled >= 0.25) throw DomainError("matrix_exp operand too large, norm bound " + std::to_string(a));

  Var t = scale(x, std::ldexp(1.0, -squarings));
  Var acc = add(constant(Tensor::identity(n)), t);
  Var term = t;
  for (int k = 2; k <= 10; ++k) {
    term = scale(matmul(term, t), 1.0 / static_cast<double>(k));
    acc = add(acc, term);
  }
  for (int s = 0; s < squarings; ++s) acc = matmul(acc, acc);
  return acc;
}

Var rotation2(const Var& theta) {
  if (theta.val().numel() != 1)
    throw DimensionError("rotation2 needs a scalar angle, got " + theta.val().shape_str());
  return matrix_exp(mul(constant(spin2()), theta));
}

Var plane_rotation(const Var& basis, const Var& theta) {
  if (basis.val().rank() != 2 || basis.val().cols() != 2)
    throw DimensionError("plane_rotation needs an m x 2 basis, got " + basis.val().shape_str());
  const int m = basis.val().rows();
  Var r = rotation2(theta);
  Var delta = sub(r, constant(Tensor::identity(2)));
  return add(constant(Tensor::identity(m)), matmul(matmul(basis, delta), transpose(basis)));
}

Var pad_linear_block(const Var& a) {
  if (a.val().rank() != 2 || a.val().rows() != a.val().cols())
    throw DimensionError("pad_linear_block needs a square matrix, got " + a.val().shape_str());
  const int m = a.val().rows();
  Tensor u = Tensor::zeros({m + 1, m});  // [I; 0]
  for (int i = 0; i < m; ++i) u.at(i, i) = 1.0;
  Var uv = constant(u);
  return matmul(matmul(uv, a), transpose(uv));
}

Var pad_offset_block(const Var& v) {
  if (v.val().rank() != 1) throw DimensionError("pad_offset_block needs a vector");
  const int m = static_cast<int>(v.val().numel());
  Tensor u = Tensor::zeros({m + 1, m});
  for (int i = 0; i < m; ++i) u.at(i, i) = 1.0;
  Tensor last = Tensor::zeros({1, m + 1});
  last.at(0, m) = 1.0;
  return matmul(matmul(constant(u), reshape(v, {m, 1})), constant(last));
}

Tensor matrix_exp_value(const Tensor& x) { return matrix_exp(constant(x)).val(); }

Tensor orthonormalize_pair_value(const Tensor& v) { return orthonormalize_pair(constant(v)).val(); }

}  // namespace lmos
