#pragma once

#include <functional>
#include <vector>

#include "latentmos/dataset.hpp"
#include "latentmos/nets.hpp"
#include "latentmos/rng.hpp"
#include "latentmos/tape.hpp"

namespace lmos {

// Posterior over the initial latent state: diagonal Gaussian with
// strictly positive standard deviations (softplus-parameterized).
struct EncoderOutput {
  Var mu;
  Var sigma;
};

// Classical fourth-order Runge-Kutta step on tape values. The time
// argument is carried only for error reporting; the vector field is
// autonomous. Throws DivergenceError when a stage goes non-finite.
using OdeField = std::function<Var(Tape&, const Var&)>;
Var rk4_step(Tape& tape, const OdeField& f, const Var& z, double t, double dt);

// ODE-RNN over the observed points of one trajectory, processed in
// reverse chronological order so the posterior over the initial state
// conditions on the whole sequence. Between observations the hidden
// state follows a learned vector field integrated with fixed RK4
// micro-steps; at each observation a GRU cell folds in the value plus
// the normalized time gap as one extra input feature.
struct OdeRnnEncoder {
  OdeRnnEncoder(int obs_dim, int latent_dim);

  EncoderOutput encode(Tape& tape, const Trajectory& traj);

  void collect(std::vector<Parameter*>& out);

  int obs_dim() const { return obs_dim_; }
  int latent_dim() const { return latent_dim_; }

  Mlp update_gate;
  Mlp reset_gate;
  Mlp candidate;
  Mlp ode_func;
  Parameter head_w;
  Parameter head_b;

 private:
  int obs_dim_ = 0;
  int latent_dim_ = 0;
};

// Reparameterized draw z = mu + sigma * eps with eps ~ N(0, I) taken
// from the generator; the noise enters as a constant so gradients flow
// to mu and sigma only.
Var sample_latent(const EncoderOutput& out, Rng& rng);

}  // namespace lmos
