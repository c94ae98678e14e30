#include "latentmos/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentmos/error.hpp"

namespace lmos {

void validate(const ExperimentConfig& cfg) {
  if (cfg.drop_rate < 0.0 || cfg.drop_rate >= 1.0)
    throw ConfigError("config: drop_rate must lie in [0, 1)");
  if (cfg.latent_dim < 1) throw ConfigError("config: latent_dim must be positive");
  if (cfg.subintervals.empty()) throw ConfigError("config: at least one level required");
  for (int L : cfg.subintervals)
    if (L < 1) throw ConfigError("config: subinterval counts must be at least 1");
  if (static_cast<int>(cfg.subintervals.size()) > cfg.latent_dim)
    throw ConfigError("config: more levels than latent dimensions");
  if (cfg.top_k < 1) throw ConfigError("config: top_k must be at least 1");
  if (cfg.warmup_epochs < 0) throw ConfigError("config: warmup_epochs must be non-negative");
  if (cfg.epochs < 0) throw ConfigError("config: epochs must be non-negative");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("config: learning_rate must be positive");
  if (cfg.loss != "mse" && cfg.loss != "elbo")
    throw ConfigError("config: loss must be 'mse' or 'elbo'");
  if (cfg.beta < 0.0) throw ConfigError("config: beta must be non-negative");
  if (!(cfg.split_fraction > 0.0) || cfg.split_fraction > 1.0)
    throw ConfigError("config: split_fraction must lie in (0, 1]");
  parse_task(cfg.task);  // throws on unknown names
}

Var mse_loss(const std::vector<Var>& pred, const std::vector<Tensor>& target,
             const std::vector<char>& eval_mask) {
  if (pred.size() != target.size() || pred.size() != eval_mask.size())
    throw DimensionError("mse_loss: prediction, target, and mask lengths differ");
  std::int64_t entries = 0;
  Var acc = constant(0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!eval_mask[i]) continue;
    if (!pred[i].val().same_shape(target[i]))
      throw DimensionError("mse_loss: shape mismatch at timestep " + std::to_string(i));
    acc = add(acc, sum(square(sub(pred[i], constant(target[i])))));
    entries += target[i].numel();
  }
  if (entries == 0) throw ContractError("mse_loss: eval mask selects no entries");
  return scale(acc, 1.0 / static_cast<double>(entries));
}

Var kl_diag_gaussian(const Var& mu, const Var& sigma) {
  Var t = add(square(mu), square(sigma));
  t = sub(t, constant(1.0));
  t = sub(t, scale(log(sigma), 2.0));
  return scale(sum(t), 0.5);
}

Var elbo_loss(const Var& recon, const Var& kl, double beta) {
  if (beta < 0.0) throw DomainError("elbo_loss: beta must be non-negative");
  return add(recon, scale(kl, beta));
}

void Adam::attach(const std::vector<Parameter*>& params) {
  step = 0;
  m1.clear();
  m2.clear();
  for (const Parameter* p : params) {
    m1.push_back(Tensor::zeros(p->value.shape()));
    m2.push_back(Tensor::zeros(p->value.shape()));
  }
}

void Adam::update(const std::vector<Parameter*>& params) {
  if (params.size() != m1.size()) throw ContractError("Adam: not attached to this parameter list");
  step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    for (std::int64_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad[j];
      m1[i][j] = beta1 * m1[i][j] + (1.0 - beta1) * g;
      m2[i][j] = beta2 * m2[i][j] + (1.0 - beta2) * g * g;
      const double mhat = m1[i][j] / bc1;
      const double vhat = m2[i][j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

Model::Model(const ExperimentConfig& cfg_, int obs_dim_)
    : cfg(cfg_),
      obs_dim(obs_dim_),
      encoder(obs_dim_, cfg_.latent_dim),
      decoder([&] {
        DecoderConfig d;
        d.obs_dim = obs_dim_;
        d.latent_dim = cfg_.latent_dim;
        d.hidden = cfg_.hidden;
        d.subintervals = cfg_.subintervals;
        d.top_k = cfg_.top_k;
        d.warmup_epochs = cfg_.warmup_epochs;
        d.roster = cfg_.roster;
        return d;
      }()) {
  norm.mean = Tensor::zeros({obs_dim_});
  norm.stddev = Tensor::full({obs_dim_}, 1.0);
  norm.scaled.assign(static_cast<std::size_t>(obs_dim_), 1);
  encoder.collect(params);
  decoder.collect(params);
}

void Model::init_weights() {
  Rng rng = Rng::substream(cfg.seed, "init");
  init_uniform(params, rng);
}

std::unique_ptr<Model> make_model(const ExperimentConfig& cfg, int obs_dim) {
  validate(cfg);
  if (obs_dim < 1) throw ConfigError("model: observation dimension must be positive");
  return std::make_unique<Model>(cfg, obs_dim);
}

Prepared prepare(const ExperimentConfig& cfg, Dataset data) {
  validate(cfg);
  if (data.trajectories.empty()) throw ContractError("prepare: dataset has no trajectories");
  for (const auto& t : data.trajectories)
    if (t.points() < 2)
      throw ConfigError("prepare: trajectory " + t.id + " needs at least 2 points");

  Prepared prep;
  prep.task = parse_task(cfg.task);
  apply_observation_drop(data, cfg.drop_rate, prep.task, cfg.seed);
  prep.split = split_trajectories(data, cfg.split_fraction, cfg.seed);
  prep.norm = compute_normalization(data, prep.split.train);

  prep.normed = data;
  for (auto& t : prep.normed.trajectories)
    for (auto& v : t.values) v = normalize_point(prep.norm, v);
  prep.raw = std::move(data);
  return prep;
}

int micro_step_count(int grid_steps, const std::vector<int>& subintervals) {
  if (subintervals.empty()) throw ContractError("micro_step_count: no levels");
  long mult = 1;
  for (int L : subintervals) mult = std::lcm(mult, static_cast<long>(L));
  const long want = std::max<long>(1, 2L * grid_steps);
  const long n = ((want + mult - 1) / mult) * mult;
  return static_cast<int>(n);
}

namespace {

// Train-time supervision targets.
std::vector<int> supervised_indices(const Trajectory& t, TaskKind task) {
  std::vector<int> out;
  const int half = extrapolation_split_index(t.points());
  for (int i = 0; i < t.points(); ++i) {
    const bool obs = t.mask[static_cast<std::size_t>(i)] != 0;
    if (task == TaskKind::kInterpolation ? obs : (obs || i >= half)) out.push_back(i);
  }
  return out;
}

// Test-time scoring targets.
std::vector<int> scored_indices(const Trajectory& t, TaskKind task) {
  std::vector<int> out;
  const int start = task == TaskKind::kInterpolation ? 0 : extrapolation_split_index(t.points());
  for (int i = start; i < t.points(); ++i) out.push_back(i);
  return out;
}

struct Rolled {
  EncoderOutput enc;
  LatentTrajectory traj;
  double t0 = 0.0;
  double dt = 0.0;
  int n_micro = 0;
};

Rolled roll(Model& model, Tape& tape, const Trajectory& nt, int epoch, bool deterministic,
            Rng* noise) {
  Rolled r;
  r.enc = model.encoder.encode(tape, nt);
  Var z0 = deterministic ? r.enc.mu : sample_latent(r.enc, *noise);
  r.t0 = nt.times.front();
  const double tN = nt.times.back();
  r.n_micro = micro_step_count(nt.points() - 1, model.cfg.subintervals);
  r.dt = (tN - r.t0) / static_cast<double>(r.n_micro);
  r.traj = model.decoder.rollout(tape, z0, r.t0, tN, r.dt, epoch);
  return r;
}

int grid_index(const Rolled& r, double t) {
  const long i = std::lround((t - r.t0) / r.dt);
  return static_cast<int>(std::clamp(i, 0L, static_cast<long>(r.n_micro)));
}

Var squared_residual_sum(Model& model, Tape& tape, const Rolled& r, const Trajectory& nt,
                         const std::vector<int>& idxs) {
  Var acc = constant(0.0);
  for (int i : idxs) {
    const int g = grid_index(r, nt.times[static_cast<std::size_t>(i)]);
    Var pred = model.decoder.decode_observation(tape, r.traj.states[static_cast<std::size_t>(g)]);
    acc = add(acc, sum(square(sub(pred, constant(nt.values[static_cast<std::size_t>(i)])))));
  }
  return acc;
}

void check_finite_loss(double loss, int epoch) {
  if (!std::isfinite(loss) || loss > 1e6)
    throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                          std::to_string(loss) + ")");
}

}  // namespace

EpochRecord train_epoch(Model& model, Adam& adam, const Prepared& prep, int epoch, Rng& noise) {
  const bool elbo = model.cfg.loss == "elbo";
  const bool use_kl = elbo && model.cfg.beta > 0.0;
  const int n_train = static_cast<int>(prep.split.train.size());
  if (n_train == 0) throw ContractError("train_epoch: empty training split");

  std::int64_t total_entries = 0;
  for (int ti : prep.split.train) {
    const Trajectory& t = prep.normed.trajectories[static_cast<std::size_t>(ti)];
    total_entries += static_cast<std::int64_t>(supervised_indices(t, prep.task).size()) *
                     prep.normed.dimension;
  }
  if (total_entries == 0) throw ContractError("train_epoch: no supervised entries");

  for (Parameter* p : model.params) p->reset_grad();

  EpochRecord rec;
  rec.epoch = epoch;
  for (int ti : prep.split.train) {
    const Trajectory& nt = prep.normed.trajectories[static_cast<std::size_t>(ti)];
    Tape tape;
    Rolled r = roll(model, tape, nt, epoch, !elbo, &noise);
    Var sq = squared_residual_sum(model, tape, r, nt, supervised_indices(nt, prep.task));
    const double inv_entries = 1.0 / static_cast<double>(total_entries);
    Var loss_t = scale(sq, inv_entries);
    if (use_kl) {
      Var kl = kl_diag_gaussian(r.enc.mu, r.enc.sigma);
      loss_t = add(loss_t, scale(kl, model.cfg.beta / static_cast<double>(n_train)));
      rec.kl += kl.val()[0] / static_cast<double>(n_train);
    }
    tape.backward(loss_t);
    rec.recon += sq.val()[0] * inv_entries;
    rec.loss += loss_t.val()[0];
  }

  check_finite_loss(rec.loss, epoch);
  adam.update(model.params);
  return rec;
}

EvalResult evaluate(Model& model, const Prepared& prep) {
  if (prep.split.test.empty()) throw ContractError("evaluate: empty test split");
  const int eval_epoch = model.cfg.epochs;  // the gating regime training ended in
  const int dim = prep.raw.dimension;

  EvalResult out;
  for (std::size_t lvl = 0; lvl < model.decoder.levels.size(); ++lvl) {
    GateStats gs;
    gs.level = static_cast<int>(lvl);
    gs.mean_weight.assign(model.decoder.levels[lvl].roster.size(), 0.0);
    gs.histogram.assign(10, 0);
    gs.min_nonzero = static_cast<int>(model.decoder.levels[lvl].roster.size());
    out.gates.push_back(gs);
  }

  double sq_sum = 0.0;
  std::int64_t entries = 0;
  Tensor mean = Tensor::zeros({dim});
  std::int64_t steps_seen = 0;

  // First pass: per-dimension mean of the scored raw targets (baseline).
  for (int ti : prep.split.test) {
    const Trajectory& rt = prep.raw.trajectories[static_cast<std::size_t>(ti)];
    for (int i : scored_indices(rt, prep.task))
      for (int d = 0; d < dim; ++d) mean[d] += rt.values[static_cast<std::size_t>(i)][d];
  }
  std::int64_t scored_total = 0;
  for (int ti : prep.split.test)
    scored_total += static_cast<std::int64_t>(
        scored_indices(prep.raw.trajectories[static_cast<std::size_t>(ti)], prep.task).size());
  if (scored_total == 0) throw ContractError("evaluate: no scored points");
  for (int d = 0; d < dim; ++d) mean[d] /= static_cast<double>(scored_total);

  double base_sum = 0.0;
  for (int ti : prep.split.test) {
    const Trajectory& rt = prep.raw.trajectories[static_cast<std::size_t>(ti)];
    const Trajectory& nt = prep.normed.trajectories[static_cast<std::size_t>(ti)];
    Tape tape;
    Rolled r = roll(model, tape, nt, eval_epoch, true, nullptr);
    for (int i : scored_indices(rt, prep.task)) {
      const int g = grid_index(r, rt.times[static_cast<std::size_t>(i)]);
      Var pred = model.decoder.decode_observation(tape, r.traj.states[static_cast<std::size_t>(g)]);
      Tensor raw_pred = denormalize_point(model.norm, pred.val());
      for (int d = 0; d < dim; ++d) {
        const double y = rt.values[static_cast<std::size_t>(i)][d];
        const double e = raw_pred[d] - y;
        sq_sum += e * e;
        const double b = y - mean[d];
        base_sum += b * b;
        ++entries;
      }
    }

    for (std::size_t lvl = 0; lvl < r.traj.gates.size(); ++lvl) {
      GateStats& gs = out.gates[lvl];
      for (const Tensor& w : r.traj.gates[lvl]) {
        double mx = 0.0, s = 0.0;
        int nonzero = 0;
        for (std::int64_t k = 0; k < w.numel(); ++k) {
          gs.mean_weight[static_cast<std::size_t>(k)] += w[k];
          s += w[k];
          if (w[k] != 0.0) ++nonzero;
          mx = std::max(mx, w[k]);
        }
        gs.histogram[static_cast<std::size_t>(std::min(9, static_cast<int>(mx * 10.0)))] += 1;
        gs.min_nonzero = std::min(gs.min_nonzero, nonzero);
        gs.max_nonzero = std::max(gs.max_nonzero, nonzero);
        gs.max_sum_deviation = std::max(gs.max_sum_deviation, std::abs(s - 1.0));
        gs.mean_max_weight += mx;
        if (lvl == 0) ++steps_seen;
      }
    }
  }

  out.mse = sq_sum / static_cast<double>(entries);
  out.baseline_mse = base_sum / static_cast<double>(entries);
  const double n_steps = static_cast<double>(steps_seen);
  for (GateStats& gs : out.gates) {
    for (double& w : gs.mean_weight) w /= n_steps;
    gs.mean_max_weight /= n_steps;
    for (std::size_t k = 0; k < gs.mean_weight.size(); ++k)
      if (gs.mean_weight[k] > gs.mean_weight[static_cast<std::size_t>(gs.top_expert)])
        gs.top_expert = static_cast<int>(k);
    gs.top_mean_weight = gs.mean_weight[static_cast<std::size_t>(gs.top_expert)];
  }
  return out;
}

TrainedRun run_training(const ExperimentConfig& cfg, Dataset data, const EpochCallback& on_epoch) {
  TrainedRun run;
  run.prepared = prepare(cfg, std::move(data));
  run.model = make_model(cfg, run.prepared.raw.dimension);
  run.model->norm = run.prepared.norm;
  run.model->init_weights();
  run.adam.lr = cfg.learning_rate;
  run.adam.attach(run.model->params);
  run.noise = Rng::substream(cfg.seed, "noise");

  MetricsReport& rep = run.report;
  if (cfg.epochs == 0) {
    // Initial-weights loss only: measure without touching optimizer state.
    Rng probe = run.noise;
    Adam idle;
    idle.lr = 0.0;
    idle.attach(run.model->params);
    EpochRecord rec = train_epoch(*run.model, idle, run.prepared, 0, probe);
    rep.final_train_loss = rec.loss;
  } else {
    for (int e = 0; e < cfg.epochs; ++e) {
      rep.history.push_back(train_epoch(*run.model, run.adam, run.prepared, e, run.noise));
      if (on_epoch) on_epoch(rep.history.back());
    }
    rep.final_train_loss = rep.history.back().loss;
  }
  rep.epochs_run = cfg.epochs;

  EvalResult ev = evaluate(*run.model, run.prepared);
  rep.test_mse = ev.mse;
  rep.baseline_mse = ev.baseline_mse;
  rep.gates = std::move(ev.gates);
  return run;
}

}  // namespace lmos
