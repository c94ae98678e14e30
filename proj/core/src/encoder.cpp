#include "latentmos/encoder.hpp"

#include <cmath>
#include <string>

#include "latentmos/error.hpp"

namespace lmos {

Var rk4_step(Tape& tape, const OdeField& f, const Var& z, double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
  auto stage = [&](const Var& v) {
    Var k = f(tape, v);
    if (!k.val().all_finite())
      throw DivergenceError("rk4_step: non-finite stage value at t = " + std::to_string(t));
    return k;
  };
  Var k1 = stage(z);
  Var k2 = stage(add(z, scale(k1, 0.5 * dt)));
  Var k3 = stage(add(z, scale(k2, 0.5 * dt)));
  Var k4 = stage(add(z, scale(k3, dt)));
  Var weighted = add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4));
  return add(z, scale(weighted, dt / 6.0));
}

OdeRnnEncoder::OdeRnnEncoder(int obs_dim, int latent_dim)
    : update_gate("enc.update", obs_dim + 1 + latent_dim, latent_dim, latent_dim),
      reset_gate("enc.reset", obs_dim + 1 + latent_dim, latent_dim, latent_dim),
      candidate("enc.cand", obs_dim + 1 + latent_dim, latent_dim, latent_dim),
      ode_func("enc.ode", latent_dim, latent_dim, latent_dim),
      head_w("enc.head.w", Tensor::zeros({2 * latent_dim, latent_dim})),
      head_b("enc.head.b", Tensor::zeros({2 * latent_dim})),
      obs_dim_(obs_dim),
      latent_dim_(latent_dim) {
  if (obs_dim <= 0 || latent_dim <= 0)
    throw ConfigError("OdeRnnEncoder: dimensions must be positive");
}

EncoderOutput OdeRnnEncoder::encode(Tape& tape, const Trajectory& traj) {
  std::vector<int> obs;
  for (int i = 0; i < traj.points(); ++i)
    if (traj.mask[static_cast<std::size_t>(i)]) obs.push_back(i);
  if (obs.empty()) throw ContractError("encode: trajectory " + traj.id + " has no observed points");

  const double span = traj.times[static_cast<std::size_t>(obs.back())] -
                      traj.times[static_cast<std::size_t>(obs.front())];
  const double denom = span > 0.0 ? span : 1.0;
  const double dt_enc = span / (4.0 * static_cast<double>(obs.size()));

  const int m = latent_dim_;
  Var h = constant(Tensor::zeros({m}));
  const Var ones = constant(Tensor::full({m}, 1.0));
  OdeField field = [this](Tape& t, const Var& z) { return ode_func.forward(t, z); };

  for (std::size_t step = 0; step < obs.size(); ++step) {
    const std::size_t k = obs.size() - 1 - step;
    const int idx = obs[k];
    double gap = 0.0;
    if (step > 0) {
      const int prev = obs[k + 1];  // previously processed, later in time
      gap = traj.times[static_cast<std::size_t>(prev)] - traj.times[static_cast<std::size_t>(idx)];
      const int micro = std::max(1, static_cast<int>(std::ceil(gap / dt_enc)));
      const double dt = gap / static_cast<double>(micro);
      double t = traj.times[static_cast<std::size_t>(prev)];
      for (int s = 0; s < micro; ++s, t -= dt) h = rk4_step(tape, field, h, t, dt);
    }

    const Tensor& x = traj.values[static_cast<std::size_t>(idx)];
    Tensor feat = Tensor::zeros({obs_dim_ + 1});
    for (int d = 0; d < obs_dim_; ++d) feat[d] = x[d];
    feat[obs_dim_] = gap / denom;

    Var xin = constant(feat);
    Var xh = concat(xin, h);
    Var u = sigmoid(update_gate.forward(tape, xh));
    Var r = sigmoid(reset_gate.forward(tape, xh));
    Var c = tanh(candidate.forward(tape, concat(xin, mul(r, h))));
    h = add(mul(sub(ones, u), h), mul(u, c));
  }

  Var pre = add(matmul(tape.leaf(head_w), h), tape.leaf(head_b));
  EncoderOutput out;
  out.mu = slice(pre, 0, m);
  out.sigma = softplus(slice(pre, m, m));
  return out;
}

void OdeRnnEncoder::collect(std::vector<Parameter*>& out) {
  update_gate.collect(out);
  reset_gate.collect(out);
  candidate.collect(out);
  ode_func.collect(out);
  out.push_back(&head_w);
  out.push_back(&head_b);
}

Var sample_latent(const EncoderOutput& out, Rng& rng) {
  const std::int64_t m = out.mu.val().numel();
  Tensor eps = Tensor::zeros({static_cast<int>(m)});
  for (std::int64_t i = 0; i < m; ++i) eps[i] = rng.normal();
  return add(out.mu, mul(out.sigma, constant(eps)));
}

}  // namespace lmos
