#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "latentmos/dataset.hpp"
#include "latentmos/decoder.hpp"
#include "latentmos/encoder.hpp"
#include "latentmos/rng.hpp"
#include "latentmos/tape.hpp"

namespace lmos {

struct ExperimentConfig {
  std::string dataset = "spiral";      // spiral | glycolytic | lotka | csv:<path>
  std::string task = "interpolation";  // interpolation | extrapolation
  double drop_rate = 0.9;
  int latent_dim = 15;
  int hidden = 0;  // net width; 0 means latent_dim
  std::vector<int> subintervals = {2, 5};
  int top_k = 2;
  int warmup_epochs = 10;
  int epochs = 300;
  double learning_rate = 0.001;
  std::string loss = "mse";  // mse | elbo
  double beta = 1.0;
  std::uint64_t seed = 0;
  double split_fraction = 0.8;
  std::string roster = "full";
};

void validate(const ExperimentConfig& cfg);

// Pooled mean of squared differences over the masked timesteps.
Var mse_loss(const std::vector<Var>& pred, const std::vector<Tensor>& target,
             const std::vector<char>& eval_mask);

// KL(N(mu, diag(sigma^2)) || N(0, I)) = sum_i 0.5 (mu_i^2 + sigma_i^2 - 1 - ln sigma_i^2).
Var kl_diag_gaussian(const Var& mu, const Var& sigma);

// Minimization form: recon + beta * kl.
Var elbo_loss(const Var& recon, const Var& kl, double beta);

// Adam with bias correction; moments persist across steps and live in the
// same order as the parameter list they were attached to.
struct Adam {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m1, m2;

  void attach(const std::vector<Parameter*>& params);
  void update(const std::vector<Parameter*>& params);
};

// Encoder + decoder pair with the flat parameter list and the train-split
// normalization baked in. Address-stable: parameters are referenced by
// pointer, so the model neither copies nor moves.
struct Model {
  ExperimentConfig cfg;
  int obs_dim = 0;
  OdeRnnEncoder encoder;
  MosDecoder decoder;
  Normalization norm;
  std::vector<Parameter*> params;

  Model(const ExperimentConfig& cfg_, int obs_dim_);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  void init_weights();  // uniform +-1/sqrt(fan_in), seeded from cfg.seed
};

std::unique_ptr<Model> make_model(const ExperimentConfig& cfg, int obs_dim);

// Dataset after drop masking plus its normalized twin and the split.
struct Prepared {
  Dataset raw;
  Dataset normed;
  SplitIndices split;
  Normalization norm;
  TaskKind task = TaskKind::kInterpolation;
};

Prepared prepare(const ExperimentConfig& cfg, Dataset data);

// Micro-step count for one trajectory: the smallest multiple of
// lcm(subintervals) that is at least twice the data grid's step count.
int micro_step_count(int grid_steps, const std::vector<int>& subintervals);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

struct GateStats {
  int level = 0;
  std::vector<double> mean_weight;      // per expert, averaged over steps
  std::vector<std::int64_t> histogram;  // of per-step max weight, 10 bins on [0,1]
  int top_expert = 0;
  double top_mean_weight = 0.0;
  double mean_max_weight = 0.0;
  int min_nonzero = 0;  // per-step nonzero-weight counts observed
  int max_nonzero = 0;
  double max_sum_deviation = 0.0;  // worst |sum(w) - 1|
};

struct EvalResult {
  double mse = 0.0;           // raw units
  double baseline_mse = 0.0;  // constant per-dimension test mean
  std::vector<GateStats> gates;
};

struct MetricsReport {
  std::vector<EpochRecord> history;
  double final_train_loss = 0.0;
  double test_mse = 0.0;
  double baseline_mse = 0.0;
  std::vector<GateStats> gates;
  int epochs_run = 0;
};

// One full-batch epoch: accumulate gradients trajectory by trajectory in
// split order, then one Adam step. Throws DivergenceError when the loss
// goes non-finite or above 1e6.
EpochRecord train_epoch(Model& model, Adam& adam, const Prepared& prep, int epoch, Rng& noise);

// Deterministic evaluation (latent = posterior mean) on the test split,
// scored in raw units on the task's target points.
EvalResult evaluate(Model& model, const Prepared& prep);

struct TrainedRun {
  std::unique_ptr<Model> model;
  Adam adam;
  Rng noise{0};
  Prepared prepared;
  MetricsReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainedRun run_training(const ExperimentConfig& cfg, Dataset data,
                        const EpochCallback& on_epoch = {});

// JSON checkpoint holding config, weights, Adam moments, noise generator
// state, and normalization; loading restores a bitwise-identical run.
void save_checkpoint(const std::string& path, const Model& model, const Adam& adam,
                     const Rng& noise, int epoch);

struct LoadedRun {
  std::unique_ptr<Model> model;
  Adam adam;
  Rng noise{0};
  int epoch = 0;
};

LoadedRun load_checkpoint(const std::string& path);

}  // namespace lmos
