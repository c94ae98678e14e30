#pragma once

#include <string>
#include <vector>

#include "latentmos/actions.hpp"
#include "latentmos/nets.hpp"
#include "latentmos/tape.hpp"

namespace lmos {

// Evenly spaced boundaries t0 + l*(tN - t0)/L, l = 0..L.
std::vector<double> subinterval_boundaries(double t0, double tN, int L);

// Convex mixture of expert actions applied to one homogeneous latent:
// z' = sum_k w[k] * (a_k z). Weights must sum to 1 within 1e-10, which is
// what keeps the trailing homogeneous coordinate exactly 1.
HomogeneousLatent mos_step(const HomogeneousLatent& z, const std::vector<AffineAction>& actions,
                           const std::vector<double>& w);

// Keeps the latent norm inside (0.5, 1.5): vectors outside are radially
// projected to the nearer bound, the zero vector maps to 0.5*e1. Vectors
// already inside pass through untouched (same Var).
Var rescale_norm(const Var& z);

// One expert slot: a base kind, or a composition of two base kinds whose
// flow follows the summed generators.
struct ExpertSpec {
  ActionKind kind = ActionKind::kRotation;
  ActionKind first = ActionKind::kRotation;   // composed experts only
  ActionKind second = ActionKind::kScaling;   // composed experts only
};

// Named rosters. "full" is every base kind plus every ordered pair of
// distinct base kinds (9 experts; rotation-bearing slots are dropped when
// the block is 1-dimensional). "rotation", "scaling", and "translation"
// are single-expert rosters for ablations and orbit tests.
std::vector<ExpertSpec> parse_roster(const std::string& name, int block_dim);

struct DecoderConfig {
  int obs_dim = 1;
  int latent_dim = 8;
  int hidden = 0;                          // net width; 0 means latent_dim
  std::vector<int> subintervals = {2, 5};  // one entry per level
  int top_k = 2;
  int warmup_epochs = 10;
  std::string roster = "full";
};

// Rollout product: states on the uniform dt grid plus the post-mask gate
// weights actually applied on each transition, recorded per level.
struct LatentTrajectory {
  std::vector<double> times;
  std::vector<Var> states;
  std::vector<std::vector<Tensor>> gates;  // [level][transition]
};

// Structured decoder: the latent is split across levels into contiguous
// blocks (as even as possible), each block evolves by a gated mixture of
// closed-form group actions held piecewise constant per subinterval, and
// the concatenated latent feeds a tanh network observation head.
struct MosDecoder {
  explicit MosDecoder(const DecoderConfig& cfg);

  // Softmax gate; from warmup_epochs on, all but the top_k weights are
  // hard-masked to zero (ties broken toward the lower index) and the
  // survivors renormalized on-tape to sum 1.
  Var gate_weights(Tape& tape, int level, double t_norm, const Var& z_block, int epoch);

  // Single-level rollout of one block. dt must tile every subinterval
  // within 1e-9 and cannot exceed 1 (one-parameter fractional steps).
  LatentTrajectory rollout_level(Tape& tape, int level, const Var& z0_block, double t0, double tN,
                                 double dt, int epoch);

  // Multi-level rollout of the full latent; per-step states have the full
  // latent dimension, gates carry one record per level.
  LatentTrajectory rollout(Tape& tape, const Var& z0, double t0, double tN, double dt, int epoch);

  Var decode_observation(Tape& tape, const Var& z);

  void collect(std::vector<Parameter*>& out);

  const DecoderConfig& config() const { return cfg_; }
  const std::vector<int>& block_dims() const { return blocks_; }

  struct Level {
    int block_dim = 0;
    std::vector<ExpertSpec> roster;
    std::vector<Mlp> cond;  // one conditioning net per expert
    Mlp gate;
  };
  std::vector<Level> levels;
  Mlp head;

 private:
  DecoderConfig cfg_;
  std::vector<int> blocks_;
};

}  // namespace lmos
