#include "latentmos/verify.hpp"

#include <algorithm>
#include <cmath>

#include "latentmos/actions.hpp"
#include "latentmos/decoder.hpp"
#include "latentmos/encoder.hpp"
#include "latentmos/error.hpp"
#include "latentmos/gradcheck.hpp"
#include "latentmos/linops.hpp"
#include "latentmos/rng.hpp"
#include "latentmos/tape.hpp"

namespace lmos {

ToleranceProfile default_profile() { return ToleranceProfile{}; }

ToleranceProfile strict_profile() {
  ToleranceProfile p;
  p.name = "strict";
  p.commutator = 1e-12;
  p.equivariance = 1e-12;
  p.subgroup = 1e-12;
  p.endpoint = 1e-12;
  p.exp_log = 1e-12;
  p.orthonormal = 1e-12;
  return p;
}

ToleranceProfile profile_by_name(const std::string& name) {
  if (name == "default") return default_profile();
  if (name == "strict") return strict_profile();
  throw ConfigError("unknown tolerance profile '" + name + "', expected default or strict");
}

bool all_passed(const std::vector<PropertyResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const PropertyResult& r) { return r.pass; });
}

namespace {

double frobenius_diff(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

Tensor random_basis(int m, Rng& rng) {
  Tensor v = Tensor::zeros({m, 2});
  for (std::int64_t i = 0; i < v.numel(); ++i) v[i] = rng.normal();
  return v;
}

AffineAction random_rotation(int m, Rng& rng) {
  return rotation_action(random_basis(m, rng), rng.uniform(-0.6, 0.6), BoundsMode::kPerStep);
}

Tensor random_velocity(int m, Rng& rng) {
  Tensor v = Tensor::zeros({m});
  double norm = 0.0;
  for (int i = 0; i < m; ++i) {
    v[i] = rng.normal();
    norm += v[i] * v[i];
  }
  const double target = 0.001 * rng.uniform(0.1, 1.0) / std::sqrt(norm);
  for (int i = 0; i < m; ++i) v[i] *= target;
  return v;
}

AffineAction random_translation(int m, Rng& rng) {
  return translation_action(random_velocity(m, rng), BoundsMode::kPerStep);
}

AffineAction random_scaling(int m, Rng& rng) {
  Tensor r = Tensor::zeros({m});
  for (int i = 0; i < m; ++i)
    r[i] = std::exp(rng.uniform(std::log(2.0 / 3.0), std::log(1.5)));
  return scaling_action(r, BoundsMode::kPerStep);
}

AffineAction random_isotropic_scaling(int m, Rng& rng) {
  const double c = std::exp(rng.uniform(std::log(2.0 / 3.0), std::log(1.5)));
  return scaling_action(Tensor::full({m}, c), BoundsMode::kPerStep);
}

AffineAction translation_orthogonal_to(const Tensor& basis, Rng& rng) {
  const int m = basis.shape()[0];
  Tensor v = random_velocity(m, rng);
  for (int c = 0; c < 2; ++c) {
    double dot = 0.0;
    for (int i = 0; i < m; ++i) dot += basis[static_cast<std::int64_t>(i) * 2 + c] * v[i];
    for (int i = 0; i < m; ++i) v[i] -= dot * basis[static_cast<std::int64_t>(i) * 2 + c];
  }
  return translation_action(v, BoundsMode::kPerStep);
}

const char* kFamilyNames[6] = {
    "translation x translation", "scaling x scaling",           "rotation x rotation (same plane)",
    "rotation x isotropic scaling", "rotation x orthogonal translation",
    "commuting compositions"};

std::pair<AffineAction, AffineAction> commuting_pair(int family, int m, Rng& rng) {
  switch (family % 6) {
    case 0: return {random_translation(m, rng), random_translation(m, rng)};
    case 1: return {random_scaling(m, rng), random_scaling(m, rng)};
    case 2: {
      Tensor p = random_basis(m, rng);
      return {rotation_action(p, rng.uniform(-0.6, 0.6), BoundsMode::kPerStep),
              rotation_action(p, rng.uniform(-0.6, 0.6), BoundsMode::kPerStep)};
    }
    case 3: return {random_rotation(m, rng), random_isotropic_scaling(m, rng)};
    case 4: {
      AffineAction rot = random_rotation(m, rng);
      return {rot, translation_orthogonal_to(rot.basis, rng)};
    }
    default: {
      Tensor p = random_basis(m, rng);
      auto a = compose_actions(rotation_action(p, rng.uniform(-0.6, 0.6), BoundsMode::kPerStep),
                               random_isotropic_scaling(m, rng));
      auto b = compose_actions(random_isotropic_scaling(m, rng),
                               rotation_action(p, rng.uniform(-0.6, 0.6), BoundsMode::kPerStep));
      return {a, b};
    }
  }
}

AffineAction random_any(int kind, int m, Rng& rng) {
  switch (kind % 4) {
    case 0: return random_rotation(m, rng);
    case 1: return random_translation(m, rng);
    case 2: return random_scaling(m, rng);
    default: return compose_actions(random_rotation(m, rng), random_isotropic_scaling(m, rng));
  }
}

PropertyResult make_result(std::string name, double worst, double tol, std::string detail) {
  PropertyResult r;
  r.name = std::move(name);
  r.worst = worst;
  r.tolerance = tol;
  r.pass = worst <= tol;
  r.detail = std::move(detail);
  return r;
}

// ---- algebra properties ----

void commutator_families(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  for (int family = 0; family < 6; ++family) {
    Rng rng = Rng::substream(prof.seed, std::string("commutator.") + kFamilyNames[family]);
    double worst = 0.0;
    for (int draw = 0; draw < prof.commutator_draws; ++draw) {
      const int m = 4 + static_cast<int>(rng.index(6));
      auto [a, b] = commuting_pair(family, m, rng);
      worst = std::max(worst, commutator_defect(a, b));
    }
    out.push_back(make_result(std::string("commutator: ") + kFamilyNames[family], worst,
                              prof.commutator,
                              std::to_string(prof.commutator_draws) + " draws, dims 4-9"));
  }
}

void equivariance_property(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  Rng rng = Rng::substream(prof.seed, "equivariance");
  double worst = 0.0;
  for (int pair = 0; pair < prof.equivariance_pairs; ++pair) {
    const int m = 4 + static_cast<int>(rng.index(4));
    auto [a, b] = commuting_pair(pair, m, rng);
    std::vector<Tensor> samples;
    for (int s = 0; s < prof.equivariance_samples; ++s) {
      Tensor z = Tensor::zeros({m});
      for (int i = 0; i < m; ++i) z[i] = rng.normal();
      samples.push_back(std::move(z));
    }
    worst = std::max(worst, equivariance_defect(a, b, samples));
  }
  out.push_back(make_result("equivariance on commuting pairs", worst, prof.equivariance,
                            std::to_string(prof.equivariance_pairs) + " pairs x " +
                                std::to_string(prof.equivariance_samples) + " latent samples"));
}

void subgroup_property(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  Rng rng = Rng::substream(prof.seed, "subgroup");
  double worst = 0.0;
  for (int draw = 0; draw < prof.subgroup_draws; ++draw) {
    const int m = 3 + static_cast<int>(rng.index(5));
    AffineAction a = random_any(draw, m, rng);
    const double s = rng.uniform(0.0, 0.5);
    const double t = rng.uniform(0.0, 0.5);
    AffineAction lhs = compose_actions(fractional_action(a, s), fractional_action(a, t));
    AffineAction rhs = fractional_action(a, s + t);
    worst = std::max(worst, frobenius_diff(homogeneous_matrix(lhs), homogeneous_matrix(rhs)));
  }
  out.push_back(make_result("subgroup consistency of fractional powers", worst, prof.subgroup,
                            std::to_string(prof.subgroup_draws) + " draws over all kinds"));
}

void endpoint_property(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  Rng rng = Rng::substream(prof.seed, "endpoint");
  double worst = 0.0;
  for (int draw = 0; draw < prof.subgroup_draws; ++draw) {
    const int m = 3 + static_cast<int>(rng.index(5));
    AffineAction a = random_any(draw, m, rng);
    worst = std::max(worst, frobenius_diff(homogeneous_matrix(fractional_action(a, 1.0)),
                                           homogeneous_matrix(a)));
    worst = std::max(worst, frobenius_diff(homogeneous_matrix(fractional_action(a, 0.0)),
                                           Tensor::identity(m + 1)));
  }
  out.push_back(make_result("fractional power endpoints (t = 0, t = 1)", worst, prof.endpoint,
                            "whole power reproduces the action, zeroth is identity"));
}

void exp_log_property(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  Rng rng = Rng::substream(prof.seed, "explog");
  double worst = 0.0;
  for (int draw = 0; draw < prof.subgroup_draws; ++draw) {
    const int m = 3 + static_cast<int>(rng.index(5));
    AffineAction a = random_any(draw, m, rng);
    worst = std::max(worst,
                     frobenius_diff(matrix_exp_value(generator_of(a)), homogeneous_matrix(a)));
  }
  out.push_back(make_result("generator exponentiation round trip", worst, prof.exp_log,
                            "exp(generator) rebuilds the homogeneous matrix"));
}

void orthonormal_property(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  Rng rng = Rng::substream(prof.seed, "orthonormal");
  double worst = 0.0;
  for (int draw = 0; draw < prof.orthonormal_draws; ++draw) {
    const int m = 2 + static_cast<int>(rng.index(8));
    Tensor p = orthonormalize_pair_value(random_basis(m, rng));
    for (int c1 = 0; c1 < 2; ++c1)
      for (int c2 = 0; c2 < 2; ++c2) {
        double dot = 0.0;
        for (int i = 0; i < m; ++i)
          dot += p[static_cast<std::int64_t>(i) * 2 + c1] * p[static_cast<std::int64_t>(i) * 2 + c2];
        worst = std::max(worst, std::abs(dot - (c1 == c2 ? 1.0 : 0.0)));
      }
  }
  out.push_back(make_result("basis orthonormality after Gram-Schmidt", worst, prof.orthonormal,
                            std::to_string(prof.orthonormal_draws) + " random raw bases"));
}

void homogeneous_chain_property(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  Rng rng = Rng::substream(prof.seed, "chain");
  const int m = 6;
  HomogeneousLatent state;
  state.z = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) state.z[i] = rng.normal();

  double worst = 0.0;
  for (int step = 0; step < prof.mos_chain_steps; ++step) {
    std::vector<AffineAction> actions;
    for (int k = 0; k < 3; ++k) actions.push_back(random_any(step + k, m, rng));
    std::vector<double> w(3);
    double sum = 0.0;
    for (double& x : w) {
      x = rng.uniform(0.05, 1.0);
      sum += x;
    }
    for (double& x : w) x /= sum;
    state = mos_step(state, actions, w);
    worst = std::max(worst, std::abs(state.trailing() - 1.0));
    // Keep the chain bounded so the drift check stays meaningful.
    double norm = 0.0;
    for (int i = 0; i < m; ++i) norm += state.z[i] * state.z[i];
    if (norm > 100.0 || norm < 0.01) {
      const double fix = 1.0 / std::sqrt(norm);
      for (int i = 0; i < m; ++i) state.z[i] *= fix;
    }
  }
  out.push_back(make_result("homogeneous coordinate across mixture chain", worst, 0.0,
                            std::to_string(prof.mos_chain_steps) +
                                " mixture steps, coordinate must stay exactly 1"));
}

// ---- gradient properties ----

void gradcheck_result(const std::string& name, const LossBuilder& f,
                      const std::vector<Parameter*>& params, const ToleranceProfile& prof,
                      std::vector<PropertyResult>& out) {
  GradCheckReport rep = finite_diff_check(f, params);
  out.push_back(make_result(name, rep.max_rel_error, prof.gradient,
                            "worst entry " + rep.worst_param + "[" +
                                std::to_string(rep.worst_index) + "] over " +
                                std::to_string(rep.entries_checked) + " entries"));
}

Var fixed_latent(Tape&, int m) {
  Tensor z = Tensor::zeros({m});
  for (int i = 0; i < m; ++i) z[i] = 0.3 + 0.2 * i * (i % 2 == 0 ? 1.0 : -1.0);
  return constant(z);
}

void expert_constructor_checks(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  const int b = 3;
  const double dt = 0.1;

  // Rotation: raw plane plus raw angle through tanh squash and Gram-Schmidt.
  {
    Parameter raw("verify.rot.basis", Tensor::matrix(b, 2, {0.9, 0.1, -0.3, 1.1, 0.4, -0.7}));
    Parameter ang("verify.rot.angle", Tensor::vector({0.35}));
    auto f = [&](Tape& tape) {
      Var p = orthonormalize_pair(tape.leaf(raw));
      Var theta = scale(tanh(tape.leaf(ang)), 0.6 * dt);
      return sum(square(matmul(plane_rotation(p, theta), fixed_latent(tape, b))));
    };
    gradcheck_result("gradient: rotation constructor", f, {&raw, &ang}, prof, out);
  }

  // Translation: velocity through the per-component tanh bound.
  {
    Parameter raw("verify.tra.v", Tensor::vector({0.5, -1.2, 0.8}));
    auto f = [&](Tape& tape) {
      Var v = scale(tanh(tape.leaf(raw)), 0.001 / std::sqrt(static_cast<double>(b)) * dt);
      return sum(square(add(fixed_latent(tape, b), v)));
    };
    gradcheck_result("gradient: translation constructor", f, {&raw}, prof, out);
  }

  // Scaling: log-ratios through the tanh bound, applied as exp(lng dt).
  {
    Parameter raw("verify.sca.lng", Tensor::vector({0.4, -0.9, 0.2}));
    auto f = [&](Tape& tape) {
      Var lng = scale(tanh(tape.leaf(raw)), std::log(1.5));
      return sum(square(mul(fixed_latent(tape, b), exp(scale(lng, dt)))));
    };
    gradcheck_result("gradient: scaling constructor", f, {&raw}, prof, out);
  }

  // Composed rotation + scaling: summed generators through the matrix
  // exponential in homogeneous coordinates.
  {
    Parameter raw("verify.mix.basis", Tensor::matrix(b, 2, {1.0, 0.2, 0.1, 0.8, -0.5, 0.3}));
    Parameter ang("verify.mix.angle", Tensor::vector({-0.5}));
    Parameter lng_raw("verify.mix.lng", Tensor::vector({0.3, 0.1, -0.6}));
    auto f = [&](Tape& tape) {
      Var p = orthonormalize_pair(tape.leaf(raw));
      Var theta = scale(tanh(tape.leaf(ang)), 0.6);
      Var spin = mul(matmul(matmul(p, constant(spin2())), transpose(p)), theta);
      Var gen = pad_linear_block(spin);
      Var lng = scale(tanh(tape.leaf(lng_raw)), std::log(1.5));
      for (int i = 0; i < b; ++i) {
        Tensor e = Tensor::zeros({b + 1, b + 1});
        e[static_cast<std::int64_t>(i) * (b + 2)] = 1.0;
        gen = add(gen, mul(constant(e), slice(lng, i, 1)));
      }
      Var step = matrix_exp(scale(gen, dt));
      Var zh = concat(fixed_latent(tape, b), constant(Tensor::vector({1.0})));
      return sum(square(slice(matmul(step, zh), 0, b)));
    };
    gradcheck_result("gradient: composed constructor", f, {&raw, &ang, &lng_raw}, prof, out);
  }
}

void encoder_check(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  const int m = 4;
  OdeRnnEncoder enc(2, m);
  std::vector<Parameter*> params;
  enc.collect(params);
  Rng rng = Rng::substream(prof.seed, "grad.encoder");
  init_uniform(params, rng);

  Trajectory traj;
  traj.id = "probe";
  traj.times = {0.0, 0.4, 1.1};
  traj.values = {Tensor::vector({0.8, -0.2}), Tensor::vector({0.5, 0.6}),
                 Tensor::vector({-0.4, 0.9})};
  traj.mask = {1, 1, 1};

  auto f = [&](Tape& tape) {
    EncoderOutput eo = enc.encode(tape, traj);
    return add(sum(square(eo.mu)), sum(square(eo.sigma)));
  };
  gradcheck_result("gradient: full encoder, 3 observations", f, params, prof, out);
}

void end_to_end_check(const ToleranceProfile& prof, std::vector<PropertyResult>& out) {
  const int m = 4;
  OdeRnnEncoder enc(2, m);
  DecoderConfig dc;
  dc.obs_dim = 2;
  dc.latent_dim = m;
  dc.subintervals = {1, 3};
  dc.top_k = 2;
  dc.warmup_epochs = 10;
  MosDecoder dec(dc);

  std::vector<Parameter*> params;
  enc.collect(params);
  dec.collect(params);
  Rng rng = Rng::substream(prof.seed, "grad.endtoend");
  init_uniform(params, rng);

  Trajectory traj;
  traj.id = "probe";
  traj.times = {0.0, 0.15, 0.3};
  traj.values = {Tensor::vector({0.9, 0.1}), Tensor::vector({0.6, 0.5}),
                 Tensor::vector({0.2, 0.8})};
  traj.mask = {1, 0, 1};

  auto f = [&](Tape& tape) {
    EncoderOutput eo = enc.encode(tape, traj);
    LatentTrajectory lt = dec.rollout(tape, eo.mu, 0.0, 0.3, 0.1, 0);
    Var acc = constant(0.0);
    for (int i = 0; i < 3; ++i) {
      Var pred = dec.decode_observation(tape, lt.states[static_cast<std::size_t>(i)]);
      acc = add(acc, sum(square(sub(pred, constant(traj.values[static_cast<std::size_t>(i)])))));
    }
    return scale(acc, 1.0 / 6.0);
  };
  gradcheck_result("gradient: end-to-end loss, 3 rollout steps", f, params, prof, out);
}

}  // namespace

std::vector<PropertyResult> run_algebra_suite(const ToleranceProfile& prof) {
  std::vector<PropertyResult> out;
  commutator_families(prof, out);
  equivariance_property(prof, out);
  subgroup_property(prof, out);
  endpoint_property(prof, out);
  exp_log_property(prof, out);
  orthonormal_property(prof, out);
  homogeneous_chain_property(prof, out);
  return out;
}

std::vector<PropertyResult> run_gradient_suite(const ToleranceProfile& prof) {
  std::vector<PropertyResult> out;
  expert_constructor_checks(prof, out);
  encoder_check(prof, out);
  end_to_end_check(prof, out);
  return out;
}

std::vector<PropertyResult> run_verify(const ToleranceProfile& prof) {
  std::vector<PropertyResult> out = run_algebra_suite(prof);
  std::vector<PropertyResult> grad = run_gradient_suite(prof);
  out.insert(out.end(), grad.begin(), grad.end());
  return out;
}

}  // namespace lmos
