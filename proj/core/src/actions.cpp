#include "latentmos/actions.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "latentmos/error.hpp"
#include "latentmos/linops.hpp"
#include "latentmos/tape.hpp"

namespace lmos {

namespace {

constexpr double kMaxAngle = 0.6;
constexpr double kMaxSpeed = 0.001;
constexpr double kMaxRatio = 1.5;

Tensor mat_mul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::zeros({a.rows(), b.cols()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

Tensor mat_vec(const Tensor& a, const Tensor& x) {
  Tensor out = Tensor::zeros({a.rows()});
  for (int i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (int k = 0; k < a.cols(); ++k) acc += a.at(i, k) * x[k];
    out[i] = acc;
  }
  return out;
}

void check_dim(const AffineAction& a, const AffineAction& b, const char* what) {
  if (a.dim != b.dim)
    throw DimensionError(std::string(what) + ": dimensions " + std::to_string(a.dim) + " and " +
                         std::to_string(b.dim));
}

// Rotation from an already orthonormal basis; shared by the constructor and
// fractional powers so a^1 rebuilds bit-identically.
AffineAction rotation_from_orthonormal(Tensor basis, double angle) {
  AffineAction a;
  a.kind = ActionKind::kRotation;
  a.dim = basis.rows();
  a.linear = plane_rotation(constant(basis), constant(angle)).val();
  a.offset = Tensor::zeros({a.dim});
  a.basis = std::move(basis);
  a.angle = angle;
  return a;
}

}  // namespace

Tensor HomogeneousLatent::augmented() const {
  Tensor out = Tensor::zeros({static_cast<int>(z.numel()) + 1});
  for (std::int64_t i = 0; i < z.numel(); ++i) out[i] = z[i];
  out[z.numel()] = 1.0;
  return out;
}

AffineAction rotation_action(const Tensor& basis_raw, double angle, BoundsMode mode) {
  if (mode == BoundsMode::kPerStep && std::abs(angle) > kMaxAngle)
    throw DomainError("rotation angle " + std::to_string(angle) + " exceeds bound " +
                      std::to_string(kMaxAngle));
  return rotation_from_orthonormal(orthonormalize_pair_value(basis_raw), angle);
}

AffineAction translation_action(const Tensor& velocity, BoundsMode mode) {
  if (velocity.rank() != 1) throw DimensionError("translation velocity must be a vector");
  const int m = static_cast<int>(velocity.numel());
  double norm = 0.0;
  for (int i = 0; i < m; ++i) norm += velocity[i] * velocity[i];
  norm = std::sqrt(norm);
  if (mode == BoundsMode::kPerStep && norm > kMaxSpeed)
    throw DomainError("translation speed " + std::to_string(norm) + " exceeds bound " +
                      std::to_string(kMaxSpeed));
  AffineAction a;
  a.kind = ActionKind::kTranslation;
  a.dim = m;
  a.linear = Tensor::identity(m);
  a.offset = velocity;
  a.velocity = velocity;
  return a;
}

AffineAction scaling_action(const Tensor& ratios, BoundsMode mode) {
  if (ratios.rank() != 1) throw DimensionError("scaling ratios must be a vector");
  const int m = static_cast<int>(ratios.numel());
  for (int i = 0; i < m; ++i) {
    if (ratios[i] == 0.0)
      throw DegeneracyError("singular scaling action: ratio 0 at index " + std::to_string(i));
    if (mode == BoundsMode::kPerStep && std::abs(ratios[i]) > kMaxRatio)
      throw DomainError("scaling ratio " + std::to_string(ratios[i]) + " exceeds bound " +
                        std::to_string(kMaxRatio));
  }
  AffineAction a;
  a.kind = ActionKind::kScaling;
  a.dim = m;
  a.linear = Tensor::zeros({m, m});
  for (int i = 0; i < m; ++i) a.linear.at(i, i) = ratios[i];
  a.offset = Tensor::zeros({m});
  a.ratios = ratios;
  return a;
}

AffineAction identity_action(int dim) {
  AffineAction a;
  a.kind = ActionKind::kScaling;
  a.dim = dim;
  a.linear = Tensor::identity(dim);
  a.offset = Tensor::zeros({dim});
  a.ratios = Tensor::full({dim}, 1.0);
  return a;
}

AffineAction compose_actions(const AffineAction& outer, const AffineAction& inner) {
  check_dim(outer, inner, "compose_actions");
  AffineAction a;
  a.kind = ActionKind::kComposed;
  a.dim = outer.dim;
  a.linear = mat_mul(outer.linear, inner.linear);
  Tensor shifted = mat_vec(outer.linear, inner.offset);
  a.offset = Tensor::zeros({a.dim});
  for (int i = 0; i < a.dim; ++i) a.offset[i] = shifted[i] + outer.offset[i];
  a.outer = std::make_shared<const AffineAction>(outer);
  a.inner = std::make_shared<const AffineAction>(inner);
  return a;
}

HomogeneousLatent apply_action(const AffineAction& a, const HomogeneousLatent& state) {
  if (static_cast<int>(state.z.numel()) != a.dim)
    throw DimensionError("apply_action: state dimension " + std::to_string(state.z.numel()) +
                         " vs action dimension " + std::to_string(a.dim));
  Tensor out = mat_vec(a.linear, state.z);
  for (int i = 0; i < a.dim; ++i) out[i] += a.offset[i];
  return HomogeneousLatent{std::move(out)};
}

Tensor homogeneous_matrix(const AffineAction& a) {
  const int m = a.dim;
  Tensor h = Tensor::zeros({m + 1, m + 1});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) h.at(i, j) = a.linear.at(i, j);
    h.at(i, m) = a.offset[i];
  }
  h.at(m, m) = 1.0;
  return h;
}

Tensor generator_of(const AffineAction& a) {
  const int m = a.dim;
  Tensor xi = Tensor::zeros({m + 1, m + 1});
  switch (a.kind) {
    case ActionKind::kRotation: {
      // angle * P J P^T in the linear block.
      const Tensor& p = a.basis;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          // (P J P^T)_ij with J = [[0,-1],[1,0]]
          const double v = p.at(i, 1) * p.at(j, 0) - p.at(i, 0) * p.at(j, 1);
          xi.at(i, j) = a.angle * v;
        }
      break;
    }
    case ActionKind::kTranslation: {
      for (int i = 0; i < m; ++i) xi.at(i, m) = a.velocity[i];
      break;
    }
    case ActionKind::kScaling: {
      for (int i = 0; i < m; ++i) {
        const double r = a.ratios[i];
        if (r <= 0.0)
          throw DomainError("generator of scaling needs positive ratios, got " +
                            std::to_string(r) + " at index " + std::to_string(i));
        xi.at(i, i) = std::log(r);
      }
      break;
    }
    case ActionKind::kComposed: {
      if (a.frozen_generator) return *a.frozen_generator;
      if (!a.outer || !a.inner)
        throw ContractError("composed action without factors or a frozen generator");
      Tensor g1 = generator_of(*a.outer);
      Tensor g2 = generator_of(*a.inner);
      for (std::int64_t i = 0; i < xi.numel(); ++i) xi[i] = g1[i] + g2[i];
      break;
    }
  }
  return xi;
}

AffineAction fractional_action(const AffineAction& a, double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("fractional exponent " + std::to_string(t) + " outside [0, 1]");
  switch (a.kind) {
    case ActionKind::kRotation:
      return rotation_from_orthonormal(a.basis, t * a.angle);
    case ActionKind::kTranslation: {
      Tensor v = a.velocity;
      for (std::int64_t i = 0; i < v.numel(); ++i) v[i] *= t;
      return translation_action(v, BoundsMode::kOracle);
    }
    case ActionKind::kScaling: {
      Tensor r = a.ratios;
      for (std::int64_t i = 0; i < r.numel(); ++i) {
        if (r[i] <= 0.0)
          throw DomainError("fractional power of scaling needs positive ratios, got " +
                            std::to_string(r[i]));
        r[i] = std::exp(t * std::log(r[i]));
      }
      return scaling_action(r, BoundsMode::kOracle);
    }
    case ActionKind::kComposed:
    default: {
      Tensor xi = generator_of(a);
      for (std::int64_t i = 0; i < xi.numel(); ++i) xi[i] *= t;
      Tensor e = matrix_exp_value(xi);
      const int m = a.dim;
      AffineAction out;
      out.kind = ActionKind::kComposed;
      out.dim = m;
      out.linear = Tensor::zeros({m, m});
      out.offset = Tensor::zeros({m});
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) out.linear.at(i, j) = e.at(i, j);
        out.offset[i] = e.at(i, m);
      }
      out.frozen_generator = std::make_shared<const Tensor>(std::move(xi));
      return out;
    }
  }
}

double commutator_defect(const AffineAction& a, const AffineAction& b) {
  check_dim(a, b, "commutator_defect");
  Tensor ma = homogeneous_matrix(a);
  Tensor mb = homogeneous_matrix(b);
  Tensor ab = mat_mul(ma, mb);
  Tensor ba = mat_mul(mb, ma);
  double acc = 0.0;
  for (std::int64_t i = 0; i < ab.numel(); ++i) {
    const double d = ab[i] - ba[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double equivariance_defect(const AffineAction& a, const AffineAction& b,
                          const std::vector<Tensor>& samples) {
  check_dim(a, b, "equivariance_defect");
  if (samples.empty()) throw ContractError("equivariance_defect: empty sample set");
  double worst = 0.0;
  for (const Tensor& s : samples) {
    HomogeneousLatent z{s};
    Tensor lhs = apply_action(a, apply_action(b, z)).z;
    Tensor rhs = apply_action(b, apply_action(a, z)).z;
    double acc = 0.0;
    for (std::int64_t i = 0; i < lhs.numel(); ++i) {
      const double d = lhs[i] - rhs[i];
      acc += d * d;
    }
    worst = std::max(worst, std::sqrt(acc));
  }
  return worst;
}

}  // namespace lmos
