#include <benchmark/benchmark.h>

#include <vector>

#include "latentmos/decoder.hpp"
#include "latentmos/dynamics.hpp"
#include "latentmos/encoder.hpp"
#include "latentmos/linops.hpp"
#include "latentmos/rng.hpp"
#include "latentmos/tape.hpp"
#include "latentmos/tensor.hpp"

using namespace lmos;

namespace {

Tensor random_vector(Rng& rng, int n) {
  Tensor t = Tensor::zeros({n});
  for (int i = 0; i < n; ++i) t[i] = rng.normal();
  return t;
}

}  // namespace

static void BM_MatrixExp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  Tensor a = Tensor::zeros({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a.at(i, j) = 0.3 * rng.normal();
  for (auto _ : state) {
    Tape tape;
    Var e = matrix_exp(constant(a));
    benchmark::DoNotOptimize(e.val());
  }
}
BENCHMARK(BM_MatrixExp)->Arg(4)->Arg(8)->Arg(16);

static void BM_DecoderRollout(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  DecoderConfig cfg;
  cfg.obs_dim = 2;
  cfg.latent_dim = 15;
  cfg.subintervals = {2, 5};
  MosDecoder dec(cfg);
  Rng rng(2);
  Tensor z0 = random_vector(rng, cfg.latent_dim);
  const double dt = 1.0 / steps;
  for (auto _ : state) {
    Tape tape;
    std::vector<Parameter*> params;
    dec.collect(params);
    for (Parameter* p : params) tape.leaf(*p);
    auto traj = dec.rollout(tape, constant(z0), 0.0, 1.0, dt, 20);
    benchmark::DoNotOptimize(traj.states.back().val());
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_DecoderRollout)->Arg(40)->Arg(120)->Arg(240);

static void BM_EncoderForward(benchmark::State& state) {
  const int n_obs = static_cast<int>(state.range(0));
  OdeRnnEncoder enc(2, 15);
  Rng rng(3);
  Trajectory traj;
  traj.id = "bench";
  for (int i = 0; i < n_obs; ++i) {
    traj.times.push_back(0.05 * i);
    traj.values.push_back(Tensor::vector({rng.normal(), rng.normal()}));
    traj.mask.push_back(1);
  }
  for (auto _ : state) {
    Tape tape;
    std::vector<Parameter*> params;
    enc.collect(params);
    for (Parameter* p : params) tape.leaf(*p);
    auto post = enc.encode(tape, traj);
    benchmark::DoNotOptimize(post.mu.val());
  }
  state.SetItemsProcessed(state.iterations() * n_obs);
}
BENCHMARK(BM_EncoderForward)->Arg(4)->Arg(12)->Arg(40);

static void BM_Rk4Integrate(benchmark::State& state) {
  OdeSystem sys = glycolytic_system();
  std::vector<double> x0{1.0, 0.8};
  for (auto _ : state) {
    auto states = integrate(sys, x0, static_cast<int>(state.range(0)), 0.01);
    benchmark::DoNotOptimize(states.back());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rk4Integrate)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
