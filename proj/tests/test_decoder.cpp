#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "latentmos/decoder.hpp"
#include "latentmos/error.hpp"
#include "latentmos/gradcheck.hpp"

using namespace lmos;

namespace {

DecoderConfig small_cfg(int obs, int m, std::vector<int> subs, const std::string& roster,
                        int top_k = 9, int warmup = 10) {
  DecoderConfig cfg;
  cfg.obs_dim = obs;
  cfg.latent_dim = m;
  cfg.subintervals = std::move(subs);
  cfg.roster = roster;
  cfg.top_k = top_k;
  cfg.warmup_epochs = warmup;
  return cfg;
}

void randomize(MosDecoder& dec, std::uint64_t seed) {
  std::vector<Parameter*> params;
  dec.collect(params);
  Rng rng = Rng::substream(seed, "init");
  init_uniform(params, rng);
}

double norm_of(const Tensor& v) {
  double s = 0.0;
  for (std::int64_t i = 0; i < v.numel(); ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("subinterval boundaries follow the even-division formula") {
  auto b = subinterval_boundaries(0.0, 10.0, 5);
  REQUIRE(b.size() == 6);
  for (int l = 0; l <= 5; ++l) CHECK(b[static_cast<std::size_t>(l)] == 2.0 * l);
  auto single = subinterval_boundaries(0.0, 1.0, 1);
  CHECK(single == std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(static_cast<void>(subinterval_boundaries(0.0, 1.0, 0)), ContractError);
}

TEST_CASE("value-level mixture step reproduces the convex-combination arithmetic") {
  {
    auto sca2 = scaling_action(Tensor::vector({2.0}));
    HomogeneousLatent z{Tensor::vector({3.0})};
    HomogeneousLatent out = mos_step(z, {sca2}, {1.0});
    CHECK(out.z[0] == 6.0);
    CHECK(out.trailing() == 1.0);
  }
  {
    auto a = scaling_action(Tensor::vector({2.0}));
    auto b = scaling_action(Tensor::vector({4.0}));
    HomogeneousLatent z{Tensor::vector({3.0})};
    HomogeneousLatent out = mos_step(z, {a, b}, {0.5, 0.5});
    CHECK(out.z[0] == 9.0);
  }
  {
    Tensor plane = Tensor::matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
    auto rot = rotation_action(plane, 3.14159265358979323846 / 2.0);
    HomogeneousLatent z{Tensor::vector({1.0, 0.0})};
    HomogeneousLatent out = mos_step(z, {rot}, {1.0});
    CHECK(std::abs(out.z[0]) < 1e-12);
    CHECK(std::abs(out.z[1] - 1.0) < 1e-12);
    CHECK(out.trailing() == 1.0);
  }
  {
    auto a = scaling_action(Tensor::vector({2.0}));
    HomogeneousLatent z{Tensor::vector({1.0})};
    CHECK_THROWS_AS(static_cast<void>(mos_step(z, {a, a}, {0.7, 0.4})), ContractError);
  }
}

TEST_CASE("norm rescaling projects onto the trust band") {
  {
    Var z = constant(Tensor::vector({0.6, 0.8}));  // norm 1
    Var out = rescale_norm(z);
    CHECK(out.val()[0] == 0.6);
    CHECK(out.val()[1] == 0.8);
  }
  {
    Var z = constant(Tensor::vector({3.0, 0.0}));
    Var out = rescale_norm(z);
    CHECK(std::abs(norm_of(out.val()) - 1.5) < 1e-12);
    CHECK(out.val()[0] > 0.0);
    CHECK(out.val()[1] == 0.0);
  }
  {
    Var z = constant(Tensor::vector({0.0, 0.1}));
    Var out = rescale_norm(z);
    CHECK(std::abs(norm_of(out.val()) - 0.5) < 1e-12);
    CHECK(out.val()[1] > 0.0);
  }
  {
    Var z = constant(Tensor::vector({0.0, 0.0, 0.0}));
    Var out = rescale_norm(z);
    CHECK(out.val()[0] == 0.5);
    CHECK(out.val()[1] == 0.0);
    CHECK(out.val()[2] == 0.0);
  }
  {
    Parameter p("z", Tensor::vector({1.8, -0.9}));  // clamp branch
    LossBuilder f = [&](Tape& t) { return sum(square(rescale_norm(t.leaf(p)))); };
    auto rep = finite_diff_check(f, {&p}, 1e-5);
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("gate weights: softmax during warmup, hard top-k afterwards") {
  MosDecoder dec(small_cfg(1, 2, {1}, "full", 1, 10));  // K = 9 on a 2-dim block
  Tape tape;
  Var z = constant(Tensor::vector({0.3, -0.2}));

  // Zero nets give equal logits: uniform during warmup.
  Var w0 = dec.gate_weights(tape, 0, 0.0, z, 0);
  REQUIRE(w0.val().numel() == 9);
  for (int k = 0; k < 9; ++k) CHECK(std::abs(w0.val()[k] - 1.0 / 9.0) < 1e-15);

  // Post-warmup with equal logits: ties resolve to the lowest index.
  Var w1 = dec.gate_weights(tape, 0, 0.0, z, 10);
  CHECK(std::abs(w1.val()[0] - 1.0) < 1e-12);
  for (int k = 1; k < 9; ++k) CHECK(w1.val()[k] == 0.0);

  // Steer the logits through the output bias: softmax (0.5, 0.25, 0.25, ...)
  Tensor& bias = dec.levels[0].gate.biases.back().value;
  bias[1] = std::log(2.0);
  for (int k = 2; k < 9; ++k) bias[k] = -1e9;  // crush the tail
  bias[0] = 0.0;
  Tape t2;
  Var w2 = dec.gate_weights(t2, 0, 0.0, z, 10);
  CHECK(std::abs(w2.val()[1] - 1.0) < 1e-12);
  CHECK(w2.val()[0] == 0.0);

  double s = 0.0;
  int nonzero = 0;
  for (int k = 0; k < 9; ++k) {
    s += w2.val()[k];
    if (w2.val()[k] != 0.0) ++nonzero;
  }
  CHECK(std::abs(s - 1.0) < 1e-12);
  CHECK(nonzero == 1);
}

TEST_CASE("top-k equal to the roster size leaves the softmax untouched") {
  MosDecoder dec(small_cfg(1, 2, {1}, "full", 9, 0));
  randomize(dec, 31);
  Tape tape;
  Var z = constant(Tensor::vector({0.4, 0.1}));
  Var post = dec.gate_weights(tape, 0, 0.25, z, 50);
  Var dense = dec.gate_weights(tape, 0, 0.25, z, 0);
  for (int k = 0; k < 9; ++k) CHECK(post.val()[k] == dense.val()[k]);
}

TEST_CASE("identity-parameter rotation roster keeps the trajectory constant") {
  MosDecoder dec(small_cfg(1, 2, {3}, "rotation", 1, 10));
  Tape tape;
  Var z0 = constant(Tensor::vector({0.6, 0.8}));
  LatentTrajectory traj = dec.rollout_level(tape, 0, z0, 0.0, 1.2, 0.1, 0);
  REQUIRE(traj.states.size() == 13);
  for (const Var& st : traj.states) {
    CHECK(st.val()[0] == 0.6);
    CHECK(st.val()[1] == 0.8);
  }
}

TEST_CASE("a lone rotation expert traces the orbit with additive angles") {
  MosDecoder dec(small_cfg(1, 2, {2}, "rotation", 1, 10));
  // Constant angle through the conditioning bias: theta = 0.6 * tanh(atanh(0.5)).
  dec.levels[0].cond[0].biases.back().value[4] = std::atanh(0.5);
  const double theta = 0.3;

  Tape tape;
  Var z0 = constant(Tensor::vector({1.0, 0.0}));
  const double dt = 0.25;
  LatentTrajectory traj = dec.rollout_level(tape, 0, z0, 0.0, 1.0, dt, 0);
  REQUIRE(traj.states.size() == 5);
  for (int i = 0; i <= 4; ++i) {
    const double ang = theta * dt * i;  // subgroup additivity
    const Tensor& st = traj.states[static_cast<std::size_t>(i)].val();
    CHECK(std::abs(st[0] - std::cos(ang)) < 1e-9);
    CHECK(std::abs(st[1] - std::sin(ang)) < 1e-9);
    CHECK(std::abs(norm_of(st) - 1.0) < 1e-9);  // isometric flow
  }
}

TEST_CASE("a lone scaling expert produces componentwise geometric sequences") {
  MosDecoder dec(small_cfg(1, 2, {2}, "scaling", 1, 10));
  const double gamma = 0.9;
  const double raw = std::atanh(std::log(gamma) / std::log(1.5));
  Tensor& bias = dec.levels[0].cond[0].biases.back().value;
  bias[0] = raw;
  bias[1] = raw;

  Tape tape;
  Var z0 = constant(Tensor::vector({0.8, 0.3}));
  const double dt = 0.25;
  LatentTrajectory traj = dec.rollout_level(tape, 0, z0, 0.0, 1.0, dt, 0);
  const double factor = std::pow(gamma, dt);
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i)
    for (int d = 0; d < 2; ++d) {
      const double ratio = traj.states[i + 1].val()[d] / traj.states[i].val()[d];
      CHECK(std::abs(ratio - factor) < 1e-12);
    }
}

TEST_CASE("expert parameters and gate weights are frozen within a subinterval") {
  MosDecoder dec(small_cfg(2, 4, {2, 5}, "full", 2, 10));
  randomize(dec, 7);
  Tape tape;
  Var z0 = constant(Tensor::vector({0.5, -0.3, 0.2, 0.7}));
  LatentTrajectory traj = dec.rollout(tape, z0, 0.0, 1.0, 0.1, 12);  // post-warmup

  REQUIRE(traj.states.size() == 11);
  REQUIRE(traj.gates.size() == 2);
  REQUIRE(traj.gates[0].size() == 10);
  REQUIRE(traj.gates[1].size() == 10);

  // Level 0 has 2 subintervals of 5 transitions each.
  for (int l = 0; l < 2; ++l)
    for (int j = 1; j < 5; ++j)
      for (int k = 0; k < 9; ++k)
        CHECK(traj.gates[0][static_cast<std::size_t>(5 * l + j)][k] ==
              traj.gates[0][static_cast<std::size_t>(5 * l)][k]);

  // Hard sparsity post-warmup: exactly top_k nonzero, sum 1.
  for (const Tensor& w : traj.gates[0]) {
    int nonzero = 0;
    double s = 0.0;
    for (int k = 0; k < 9; ++k) {
      if (w[k] != 0.0) ++nonzero;
      s += w[k];
    }
    CHECK(nonzero == 2);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }

  // Dense during warmup.
  Tape t2;
  LatentTrajectory warm = dec.rollout(t2, z0, 0.0, 1.0, 0.1, 0);
  for (int k = 0; k < 9; ++k) CHECK(warm.gates[0][0][k] > 0.0);

  // Bitwise repeatable.
  Tape t3;
  LatentTrajectory again = dec.rollout(t3, z0, 0.0, 1.0, 0.1, 12);
  for (std::size_t i = 0; i < traj.states.size(); ++i)
    for (int d = 0; d < 4; ++d) CHECK(traj.states[i].val()[d] == again.states[i].val()[d]);
}

TEST_CASE("a single level is the degenerate hierarchy") {
  MosDecoder dec(small_cfg(1, 4, {4}, "full", 9, 10));
  randomize(dec, 13);
  Tape tape;
  Var z0 = constant(Tensor::vector({0.2, -0.6, 0.9, 0.1}));
  LatentTrajectory full = dec.rollout(tape, z0, 0.0, 2.0, 0.25, 0);
  LatentTrajectory lvl = dec.rollout_level(tape, 0, z0, 0.0, 2.0, 0.25, 0);
  REQUIRE(full.states.size() == lvl.states.size());
  for (std::size_t i = 0; i < full.states.size(); ++i)
    for (int d = 0; d < 4; ++d) CHECK(full.states[i].val()[d] == lvl.states[i].val()[d]);
}

TEST_CASE("uneven latent dimensions split into near-even blocks") {
  MosDecoder dec(small_cfg(2, 15, {2, 5}, "full", 2, 10));
  CHECK(dec.block_dims() == std::vector<int>{8, 7});
  randomize(dec, 17);
  Tape tape;
  Tensor z0t = Tensor::zeros({15});
  for (int d = 0; d < 15; ++d) z0t[d] = 0.1 * (d + 1) - 0.8;
  LatentTrajectory traj = dec.rollout(tape, constant(z0t), 0.0, 1.0, 0.05, 0);
  CHECK(traj.states.size() == 21);
  CHECK(traj.states[0].val().numel() == 15);

  CHECK_THROWS_AS(MosDecoder(small_cfg(1, 2, {1, 1, 1}, "full")), ConfigError);
}

TEST_CASE("rollout rejects grids that do not tile the subintervals") {
  MosDecoder dec(small_cfg(1, 2, {2}, "full", 9, 10));
  Tape tape;
  Var z0 = constant(Tensor::vector({0.5, 0.5}));
  CHECK_THROWS_AS(static_cast<void>(dec.rollout_level(tape, 0, z0, 0.0, 1.0, 0.3, 0)),
                  ContractError);
  CHECK_THROWS_AS(static_cast<void>(dec.rollout_level(tape, 0, z0, 0.0, 4.0, 1.5, 0)), DomainError);
  CHECK_THROWS_AS(static_cast<void>(dec.rollout_level(tape, 0, z0, 1.0, 0.0, 0.1, 0)), DomainError);
}

TEST_CASE("observation head with zero weights emits its bias") {
  MosDecoder dec(small_cfg(3, 4, {2}, "full", 9, 10));
  Tensor& bias = dec.head.biases.back().value;
  bias[0] = 0.25;
  bias[1] = -1.5;
  bias[2] = 4.0;
  Tape tape;
  Var y = dec.decode_observation(tape, constant(Tensor::vector({1.0, 2.0, 3.0, 4.0})));
  REQUIRE(y.val().numel() == 3);
  CHECK(y.val()[0] == 0.25);
  CHECK(y.val()[1] == -1.5);
  CHECK(y.val()[2] == 4.0);
}

TEST_CASE("reconstruction loss through the full rollout passes the gradient oracle") {
  MosDecoder dec(small_cfg(2, 4, {1, 3}, "full", 2, 10));
  randomize(dec, 23);
  std::vector<Parameter*> params;
  dec.collect(params);

  Tensor z0t = Tensor::vector({0.4, -0.2, 0.7, 0.1});
  std::vector<Tensor> targets;
  for (int i = 0; i <= 3; ++i)
    targets.push_back(Tensor::vector({0.3 - 0.1 * i, 0.2 + 0.05 * i}));

  auto build = [&](int epoch) {
    return [&dec, z0t, targets, epoch](Tape& t) {
      LatentTrajectory traj = dec.rollout(t, constant(z0t), 0.0, 0.3, 0.1, epoch);
      Var loss = constant(0.0);
      for (std::size_t i = 0; i < traj.states.size(); ++i) {
        Var err = sub(dec.decode_observation(t, traj.states[i]), constant(targets[i]));
        loss = add(loss, sum(square(err)));
      }
      return loss;
    };
  };

  auto warm = finite_diff_check(build(0), params, 1e-5);
  INFO("warmup worst: ", warm.worst_param);
  CHECK(warm.max_rel_error < 1e-4);

  auto sparse = finite_diff_check(build(20), params, 1e-5);
  INFO("post-warmup worst: ", sparse.worst_param);
  CHECK(sparse.max_rel_error < 1e-4);
}
