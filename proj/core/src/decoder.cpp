#include "latentmos/decoder.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "latentmos/error.hpp"
#include "latentmos/linops.hpp"

namespace lmos {

std::vector<double> subinterval_boundaries(double t0, double tN, int L) {
  if (L < 1) throw ContractError("subinterval_boundaries: L must be at least 1");
  if (!(tN > t0)) throw DomainError("subinterval_boundaries: tN must exceed t0");
  std::vector<double> b(static_cast<std::size_t>(L) + 1);
  for (int l = 0; l <= L; ++l)
    b[static_cast<std::size_t>(l)] = t0 + static_cast<double>(l) * (tN - t0) / static_cast<double>(L);
  return b;
}

HomogeneousLatent mos_step(const HomogeneousLatent& z, const std::vector<AffineAction>& actions,
                           const std::vector<double>& w) {
  if (actions.size() != w.size() || actions.empty())
    throw ContractError("mos_step: one weight per action required");
  double s = 0.0;
  for (double wk : w) s += wk;
  if (std::abs(s - 1.0) > 1e-10)
    throw ContractError("mos_step: weights sum to " + std::to_string(s) + ", expected 1");
  const std::int64_t m = z.z.numel();
  Tensor out = Tensor::zeros({static_cast<int>(m)});
  for (std::size_t k = 0; k < actions.size(); ++k) {
    HomogeneousLatent moved = apply_action(actions[k], z);
    for (std::int64_t d = 0; d < m; ++d) out[d] += w[k] * moved.z[d];
  }
  return HomogeneousLatent{out};
}

Var rescale_norm(const Var& z) {
  const Tensor& v = z.val();
  double sq = 0.0;
  for (std::int64_t i = 0; i < v.numel(); ++i) sq += v[i] * v[i];
  const double r = std::sqrt(sq);
  if (r == 0.0) {
    Tensor e = Tensor::zeros(v.shape());
    e[0] = 0.5;
    return constant(e);
  }
  if (r > 0.5 && r < 1.5) return z;
  const double c = r >= 1.5 ? 1.5 : 0.5;
  return mul(z, scale(recip_pos(norm2(z)), c));
}

namespace {

int param_count(ActionKind kind, int b) {
  switch (kind) {
    case ActionKind::kRotation: return 2 * b + 1;  // raw basis + raw angle
    case ActionKind::kTranslation: return b;
    case ActionKind::kScaling: return b;
    case ActionKind::kComposed: break;
  }
  throw ContractError("param_count: composed experts are sized from their factors");
}

int expert_param_count(const ExpertSpec& e, int b) {
  if (e.kind == ActionKind::kComposed) return param_count(e.first, b) + param_count(e.second, b);
  return param_count(e.kind, b);
}

// Canonical plane offset so a zero conditioning net still yields a valid
// orthonormal basis (identity-plane rotation by a squashed zero angle).
Tensor basis_seed(int b) {
  Tensor s = Tensor::zeros({b, 2});
  s.at(0, 0) = 1.0;
  s.at(1, 1) = 1.0;
  return s;
}

struct RotationParts {
  Var basis;  // orthonormal b x 2
  Var angle;  // squashed, |angle| <= 0.6
};

RotationParts rotation_parts(const Var& params, int offset, int b) {
  Var raw = reshape(slice(params, offset, 2 * b), {b, 2});
  RotationParts out;
  out.basis = orthonormalize_pair(add(raw, constant(basis_seed(b))));
  out.angle = scale(tanh(slice(params, offset + 2 * b, 1)), 0.6);
  return out;
}

Var translation_velocity(const Var& params, int offset, int b) {
  return scale(tanh(slice(params, offset, b)), 0.001 / std::sqrt(static_cast<double>(b)));
}

Var scaling_log_ratios(const Var& params, int offset, int b) {
  return scale(tanh(slice(params, offset, b)), std::log(1.5));
}

// Homogeneous (b+1)x(b+1) generator of one factor, read from params at
// the given offset.
Var factor_generator(ActionKind kind, const Var& params, int offset, int b) {
  switch (kind) {
    case ActionKind::kRotation: {
      RotationParts r = rotation_parts(params, offset, b);
      Var plane = matmul(matmul(r.basis, constant(spin2())), transpose(r.basis));
      return pad_linear_block(mul(plane, r.angle));
    }
    case ActionKind::kTranslation:
      return pad_offset_block(translation_velocity(params, offset, b));
    case ActionKind::kScaling: {
      Var lng = scaling_log_ratios(params, offset, b);
      Var acc = constant(Tensor::zeros({b + 1, b + 1}));
      for (int i = 0; i < b; ++i) {
        Tensor sel = Tensor::zeros({b + 1, b + 1});
        sel.at(i, i) = 1.0;
        acc = add(acc, mul(constant(sel), slice(lng, i, 1)));
      }
      return acc;
    }
    case ActionKind::kComposed: break;
  }
  throw ContractError("factor_generator: composed factors must be base kinds");
}

// One expert's micro-step map for a fixed dt, all tape values prebuilt so
// repeated application within a subinterval reuses identical graphs.
std::function<Var(const Var&)> build_step(const ExpertSpec& e, const Var& params, int b,
                                          double dt) {
  switch (e.kind) {
    case ActionKind::kRotation: {
      RotationParts r = rotation_parts(params, 0, b);
      Var rot = plane_rotation(r.basis, scale(r.angle, dt));
      return [rot](const Var& z) { return matmul(rot, z); };
    }
    case ActionKind::kTranslation: {
      Var shift = scale(translation_velocity(params, 0, b), dt);
      return [shift](const Var& z) { return add(z, shift); };
    }
    case ActionKind::kScaling: {
      Var factor = exp(scale(scaling_log_ratios(params, 0, b), dt));
      return [factor](const Var& z) { return mul(z, factor); };
    }
    case ActionKind::kComposed: {
      Var xi = add(factor_generator(e.first, params, 0, b),
                   factor_generator(e.second, params, param_count(e.first, b), b));
      Var step = matrix_exp(scale(xi, dt));
      Var one = constant(Tensor::vector({1.0}));
      return [step, one, b](const Var& z) { return slice(matmul(step, concat(z, one)), 0, b); };
    }
  }
  throw ContractError("build_step: unknown expert kind");
}

}  // namespace

std::vector<ExpertSpec> parse_roster(const std::string& name, int block_dim) {
  using K = ActionKind;
  auto base = [](K k) { return ExpertSpec{k, k, k}; };
  auto pair = [](K a, K b) { return ExpertSpec{K::kComposed, a, b}; };
  if (name == "full") {
    if (block_dim >= 2)
      return {base(K::kRotation),          base(K::kTranslation),
              base(K::kScaling),           pair(K::kRotation, K::kScaling),
              pair(K::kScaling, K::kRotation), pair(K::kRotation, K::kTranslation),
              pair(K::kTranslation, K::kRotation), pair(K::kScaling, K::kTranslation),
              pair(K::kTranslation, K::kScaling)};
    return {base(K::kTranslation), base(K::kScaling), pair(K::kScaling, K::kTranslation),
            pair(K::kTranslation, K::kScaling)};
  }
  if (name == "translation") return {base(K::kTranslation)};
  if (name == "scaling") return {base(K::kScaling)};
  if (name == "rotation") {
    if (block_dim < 2)
      throw ConfigError("roster: rotation experts need at least 2 latent dimensions per block");
    return {base(K::kRotation)};
  }
  throw ConfigError("roster: unknown roster '" + name + "'");
}

MosDecoder::MosDecoder(const DecoderConfig& cfg)
    : head("dec.head", cfg.latent_dim, cfg.hidden > 0 ? cfg.hidden : cfg.latent_dim, cfg.obs_dim),
      cfg_(cfg) {
  if (cfg.obs_dim < 1 || cfg.latent_dim < 1) throw ConfigError("decoder: dimensions must be positive");
  if (cfg.subintervals.empty()) throw ConfigError("decoder: at least one level required");
  if (cfg.top_k < 1) throw ConfigError("decoder: top_k must be at least 1");
  if (cfg.warmup_epochs < 0) throw ConfigError("decoder: warmup_epochs must be non-negative");
  const int S = static_cast<int>(cfg.subintervals.size());
  if (S > cfg.latent_dim)
    throw ConfigError("decoder: more levels than latent dimensions");
  for (int L : cfg.subintervals)
    if (L < 1) throw ConfigError("decoder: subinterval counts must be at least 1");

  // Blocks as even as possible; the wider ones come first.
  const int base = cfg.latent_dim / S;
  const int rem = cfg.latent_dim % S;
  for (int s = 0; s < S; ++s) blocks_.push_back(base + (s < rem ? 1 : 0));

  const int width = cfg.hidden > 0 ? cfg.hidden : cfg.latent_dim;
  for (int s = 0; s < S; ++s) {
    const int b = blocks_[static_cast<std::size_t>(s)];
    Level lvl{b, parse_roster(cfg.roster, b), {}, Mlp("dec.l" + std::to_string(s) + ".gate", 1 + b,
                                                     width, static_cast<int>(parse_roster(cfg.roster, b).size()))};
    for (std::size_t k = 0; k < lvl.roster.size(); ++k)
      lvl.cond.emplace_back("dec.l" + std::to_string(s) + ".e" + std::to_string(k), 1 + b, width,
                            expert_param_count(lvl.roster[k], b));
    levels.push_back(std::move(lvl));
  }
}

Var MosDecoder::gate_weights(Tape& tape, int level, double t_norm, const Var& z_block, int epoch) {
  if (epoch < 0) throw ContractError("gate_weights: epoch must be non-negative");
  Level& lvl = levels[static_cast<std::size_t>(level)];
  Var in = concat(constant(Tensor::vector({t_norm})), z_block);
  Var w = softmax(lvl.gate.forward(tape, in));
  const int K = static_cast<int>(lvl.roster.size());
  if (epoch < cfg_.warmup_epochs || cfg_.top_k >= K) return w;

  // Hard top-k mask, ties toward the lower index, then renormalize.
  std::vector<char> keep(static_cast<std::size_t>(K), 0);
  for (int pick = 0; pick < cfg_.top_k; ++pick) {
    int best = -1;
    double best_w = -1.0;
    for (int k = 0; k < K; ++k) {
      if (keep[static_cast<std::size_t>(k)]) continue;
      const double wk = w.val()[k];
      if (wk > best_w) {
        best_w = wk;
        best = k;
      }
    }
    keep[static_cast<std::size_t>(best)] = 1;
  }
  Tensor mask = Tensor::zeros({K});
  for (int k = 0; k < K; ++k) mask[k] = keep[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
  Var masked = mul(w, constant(mask));
  return mul(masked, recip_pos(sum(masked)));
}

LatentTrajectory MosDecoder::rollout_level(Tape& tape, int level, const Var& z0_block, double t0,
                                           double tN, double dt, int epoch) {
  if (level < 0 || level >= static_cast<int>(levels.size()))
    throw ContractError("rollout_level: level out of range");
  if (!(tN > t0)) throw DomainError("rollout_level: tN must exceed t0");
  if (!(dt > 0.0) || dt > 1.0)
    throw DomainError("rollout_level: dt must lie in (0, 1] for fractional steps");
  Level& lvl = levels[static_cast<std::size_t>(level)];
  const int b = lvl.block_dim;
  if (z0_block.val().numel() != b) throw DimensionError("rollout_level: block dimension mismatch");

  const int L = cfg_.subintervals[static_cast<std::size_t>(level)];
  const double sub_len = (tN - t0) / static_cast<double>(L);
  const int micro = static_cast<int>(std::lround(sub_len / dt));
  if (micro < 1 || std::abs(static_cast<double>(micro) * dt - sub_len) > 1e-9)
    throw ContractError("rollout_level: dt must evenly tile each subinterval");

  const int n_steps = L * micro;
  LatentTrajectory out;
  out.times.resize(static_cast<std::size_t>(n_steps) + 1);
  for (int i = 0; i <= n_steps; ++i)
    out.times[static_cast<std::size_t>(i)] = t0 + static_cast<double>(i) * dt;
  out.states.resize(static_cast<std::size_t>(n_steps) + 1);
  out.gates.resize(1);
  out.gates[0].reserve(static_cast<std::size_t>(n_steps));

  Var z = rescale_norm(z0_block);
  out.states[0] = z;
  const auto bounds = subinterval_boundaries(t0, tN, L);
  for (int l = 0; l < L; ++l) {
    const double t_norm = (bounds[static_cast<std::size_t>(l)] - t0) / (tN - t0);
    Var w = gate_weights(tape, level, t_norm, z, epoch);
    const Tensor w_snapshot = w.val();

    Var cond_in = concat(constant(Tensor::vector({t_norm})), z);
    std::vector<std::function<Var(const Var&)>> steps(lvl.roster.size());
    for (std::size_t k = 0; k < lvl.roster.size(); ++k) {
      if (w_snapshot[static_cast<std::int64_t>(k)] == 0.0) continue;  // hard-masked
      Var params = lvl.cond[k].forward(tape, cond_in);
      steps[k] = build_step(lvl.roster[k], params, b, dt);
    }

    for (int j = 0; j < micro; ++j) {
      Var acc;
      bool first = true;
      for (std::size_t k = 0; k < steps.size(); ++k) {
        if (!steps[k]) continue;
        Var term = mul(steps[k](z), slice(w, static_cast<int>(k), 1));
        acc = first ? term : add(acc, term);
        first = false;
      }
      z = acc;
      out.states[static_cast<std::size_t>(l * micro + j + 1)] = z;
      out.gates[0].push_back(w_snapshot);
    }

    z = rescale_norm(z);
    out.states[static_cast<std::size_t>((l + 1) * micro)] = z;
  }
  return out;
}

LatentTrajectory MosDecoder::rollout(Tape& tape, const Var& z0, double t0, double tN, double dt,
                                     int epoch) {
  if (z0.val().numel() != cfg_.latent_dim) throw DimensionError("rollout: latent dimension mismatch");
  const int S = static_cast<int>(levels.size());
  std::vector<LatentTrajectory> parts;
  parts.reserve(static_cast<std::size_t>(S));
  int offset = 0;
  for (int s = 0; s < S; ++s) {
    const int b = blocks_[static_cast<std::size_t>(s)];
    parts.push_back(rollout_level(tape, s, slice(z0, offset, b), t0, tN, dt, epoch));
    offset += b;
  }

  LatentTrajectory out;
  out.times = parts[0].times;
  const std::size_t n = parts[0].states.size();
  out.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Var st = parts[0].states[i];
    for (int s = 1; s < S; ++s) st = concat(st, parts[static_cast<std::size_t>(s)].states[i]);
    out.states[i] = st;
  }
  for (int s = 0; s < S; ++s) out.gates.push_back(std::move(parts[static_cast<std::size_t>(s)].gates[0]));
  return out;
}

Var MosDecoder::decode_observation(Tape& tape, const Var& z) {
  return head.forward(tape, z);
}

void MosDecoder::collect(std::vector<Parameter*>& out) {
  for (auto& lvl : levels) {
    for (auto& c : lvl.cond) c.collect(out);
    lvl.gate.collect(out);
  }
  head.collect(out);
}

}  // namespace lmos
