#pragma once

#include <memory>
#include <vector>

#include "latentmos/tensor.hpp"

namespace lmos {

/// Latent state in homogeneous coordinates. Only the m informative entries
/// are stored; the trailing coordinate is implicit, so it is 1.0 exactly at
/// all times by construction no matter how many actions are applied.
struct HomogeneousLatent {
  Tensor z;

  double trailing() const { return 1.0; }

  /// [z; 1] for the explicit homogeneous-matrix route.
  Tensor augmented() const;
};

enum class ActionKind { kRotation, kTranslation, kScaling, kComposed };

/// Bounds handling at construction. kPerStep enforces the training-time
/// parameter ranges (|angle| <= 0.6, |velocity| <= 0.001, |ratio| <= 1.5);
/// kOracle admits any invertible parameters for property sweeps.
enum class BoundsMode { kPerStep, kOracle };

/// Invertible affine map z -> linear z + offset, i.e. the homogeneous matrix
/// [[linear, offset], [0, 1]]. Base kinds keep their closed-form parameters
/// so fractional powers and generators have exact expressions.
struct AffineAction {
  ActionKind kind = ActionKind::kComposed;
  int dim = 0;
  Tensor linear;  // dim x dim
  Tensor offset;  // dim

  Tensor basis;        // dim x 2 orthonormal (rotation)
  double angle = 0.0;  // rotation
  Tensor velocity;     // translation
  Tensor ratios;       // scaling

  std::shared_ptr<const AffineAction> outer, inner;      // composed
  std::shared_ptr<const Tensor> frozen_generator;        // actions built from a generator
};

/// Rotation by `angle` in the plane spanned by the columns of `basis_raw`
/// (any two independent columns; they are orthonormalized).
AffineAction rotation_action(const Tensor& basis_raw, double angle,
                             BoundsMode mode = BoundsMode::kOracle);

AffineAction translation_action(const Tensor& velocity, BoundsMode mode = BoundsMode::kOracle);

/// Axis-aligned scaling. Ratios must be non-zero (invertibility); negative
/// ratios are legal here but rejected by generator_of / fractional_action.
AffineAction scaling_action(const Tensor& ratios, BoundsMode mode = BoundsMode::kOracle);

AffineAction identity_action(int dim);

/// outer ∘ inner: inner acts first. The homogeneous matrix is the product
/// matrix(outer) * matrix(inner).
AffineAction compose_actions(const AffineAction& outer, const AffineAction& inner);

HomogeneousLatent apply_action(const AffineAction& a, const HomogeneousLatent& state);

/// [[linear, offset], [0, 1]], (dim+1) x (dim+1). The bottom row is written
/// as literal constants.
Tensor homogeneous_matrix(const AffineAction& a);

/// Infinitesimal generator: the (dim+1) x (dim+1) matrix xi with
/// exp(xi) = homogeneous_matrix(a). Composed actions return the sum of their
/// factors' generators, which is exact when the factors commute and the
/// first-order flow otherwise. Throws DomainError for non-positive scaling
/// ratios.
Tensor generator_of(const AffineAction& a);

/// a^t = exp(t * generator_of(a)) with closed forms per base kind.
/// t in [0, 1]; t = 1 reproduces the action (exactly for base kinds and
/// commuting compositions).
AffineAction fractional_action(const AffineAction& a, double t);

/// Frobenius norm of M_a M_b - M_b M_a over homogeneous matrices.
double commutator_defect(const AffineAction& a, const AffineAction& b);

/// max over samples of ||a(b(z)) - b(a(z))||_2. Empty sample set is a
/// contract violation.
double equivariance_defect(const AffineAction& a, const AffineAction& b,
                           const std::vector<Tensor>& samples);

}  // namespace lmos
