// Command-line front end: dataset generation, training, evaluation, the
// property-suite verifier, and latent-trajectory export with 2D PCA.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "latentmos/config.hpp"
#include "latentmos/error.hpp"
#include "latentmos/pca.hpp"
#include "latentmos/training.hpp"
#include "latentmos/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lmos;

namespace {

constexpr int kMetricsSchemaVersion = 1;

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset;
  j["task"] = cfg.task;
  j["drop_rate"] = cfg.drop_rate;
  j["latent_dim"] = cfg.latent_dim;
  j["hidden"] = cfg.hidden;
  j["subintervals"] = cfg.subintervals;
  j["top_k"] = cfg.top_k;
  j["warmup_epochs"] = cfg.warmup_epochs;
  j["epochs"] = cfg.epochs;
  j["learning_rate"] = cfg.learning_rate;
  j["loss"] = cfg.loss;
  j["beta"] = cfg.beta;
  j["seed"] = cfg.seed;
  j["split_fraction"] = cfg.split_fraction;
  j["roster"] = cfg.roster;
  return j;
}

json gates_json(const std::vector<GateStats>& gates) {
  json arr = json::array();
  for (const GateStats& g : gates) {
    json jg;
    jg["level"] = g.level;
    jg["mean_weight"] = g.mean_weight;
    jg["histogram"] = g.histogram;
    jg["top_expert"] = g.top_expert;
    jg["top_mean_weight"] = g.top_mean_weight;
    jg["mean_max_weight"] = g.mean_max_weight;
    jg["min_nonzero"] = g.min_nonzero;
    jg["max_nonzero"] = g.max_nonzero;
    jg["max_sum_deviation"] = g.max_sum_deviation;
    arr.push_back(jg);
  }
  return arr;
}

json metrics_json(const MetricsReport& rep, const ExperimentConfig& cfg, double wall_seconds) {
  json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["kind"] = "latentmos-metrics";
  j["seed"] = cfg.seed;
  j["config"] = config_json(cfg);
  j["epochs_run"] = rep.epochs_run;
  json hist = json::array();
  for (const EpochRecord& r : rep.history) {
    json h;
    h["epoch"] = r.epoch;
    h["loss"] = r.loss;
    h["recon"] = r.recon;
    h["kl"] = r.kl;
    hist.push_back(h);
  }
  j["history"] = hist;
  j["final_train_loss"] = rep.final_train_loss;
  j["test_mse"] = rep.test_mse;
  j["baseline_mse"] = rep.baseline_mse;
  j["gates"] = gates_json(rep.gates);
  j["wall_clock_seconds"] = wall_seconds;
  return j;
}

void emit(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open " + out_path + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + out_path);
  }
}

// Dataset named by the config ("spiral", ..., or "csv:<path>"), unless a CSV
// override is given on the command line.
Dataset resolve_dataset(const ExperimentConfig& cfg, const std::string& override_path) {
  if (!override_path.empty()) return load_csv(override_path);
  if (cfg.dataset.rfind("csv:", 0) == 0) return load_csv(cfg.dataset.substr(4));
  return gen_dataset(cfg.dataset, cfg.seed);
}

// Evaluation inputs must be normalized with the statistics the model was
// trained on, not with fresh ones from the evaluation split.
void renormalize_with(Prepared& prep, const Normalization& norm) {
  prep.norm = norm;
  prep.normed = prep.raw;
  for (auto& t : prep.normed.trajectories)
    for (auto& v : t.values) v = normalize_point(norm, v);
}

int cmd_generate(const std::string& kind, std::uint64_t seed, const std::string& out) {
  Dataset ds = gen_dataset(kind, seed);
  fs::path target(out);
  if (out.back() == '/' || fs::is_directory(target)) target /= kind + ".csv";
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  save_csv(ds, target.string());
  std::cout << "wrote " << ds.trajectories.size() << " trajectories to " << target.string()
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& report_path, const std::string& checkpoint_path) {
  const ExperimentConfig cfg = load_config(config_path);
  Dataset data = resolve_dataset(cfg, data_path);
  const auto t0 = std::chrono::steady_clock::now();
  TrainedRun run = run_training(cfg, std::move(data), [&](const EpochRecord& r) {
    std::cerr << "epoch " << (r.epoch + 1) << "/" << cfg.epochs << " loss " << r.loss << "\n";
  });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_checkpoint(checkpoint_path, *run.model, run.adam, run.noise, cfg.epochs);
  emit(metrics_json(run.report, cfg, wall), report_path);
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& task, double drop,
             bool drop_set, std::uint64_t seed, bool seed_set, const std::string& data_path,
             const std::string& report_path) {
  LoadedRun lr = load_checkpoint(checkpoint_path);
  ExperimentConfig cfg = lr.model->cfg;
  if (!task.empty()) cfg.task = task;
  if (drop_set) cfg.drop_rate = drop;
  if (seed_set) cfg.seed = seed;
  validate(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  Prepared prep = prepare(cfg, resolve_dataset(cfg, data_path));
  if (prep.raw.dimension != lr.model->obs_dim)
    throw DimensionError("eval: dataset dimension " + std::to_string(prep.raw.dimension) +
                         " does not match the checkpoint's " + std::to_string(lr.model->obs_dim));
  renormalize_with(prep, lr.model->norm);
  EvalResult ev = evaluate(*lr.model, prep);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json j;
  j["schema_version"] = kMetricsSchemaVersion;
  j["kind"] = "latentmos-eval";
  j["task"] = cfg.task;
  j["drop_rate"] = cfg.drop_rate;
  j["seed"] = cfg.seed;
  j["test_mse"] = ev.mse;
  j["baseline_mse"] = ev.baseline_mse;
  j["gates"] = gates_json(ev.gates);
  j["wall_clock_seconds"] = wall;
  emit(j, report_path);
  return 0;
}

int cmd_verify(const std::string& profile_name) {
  const ToleranceProfile prof = profile_by_name(profile_name);
  const std::vector<PropertyResult> results = run_verify(prof);
  std::printf("%-46s %13s %13s  %s\n", "property", "worst", "tolerance", "status");
  for (const PropertyResult& r : results)
    std::printf("%-46s %13.3e %13.3e  %s\n", r.name.c_str(), r.worst, r.tolerance,
                r.pass ? "PASS" : "FAIL");
  int failures = 0;
  for (const PropertyResult& r : results)
    if (!r.pass) {
      ++failures;
      std::printf("FAILED: %s (worst defect %.6e, tolerance %.6e; %s)\n", r.name.c_str(), r.worst,
                  r.tolerance, r.detail.c_str());
    }
  std::printf("%zu properties, %d failed, profile %s\n", results.size(), failures,
              prof.name.c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_export_latent(const std::string& checkpoint_path, const std::string& data_name,
                      std::uint64_t seed, bool seed_set, const std::string& out_path) {
  LoadedRun lr = load_checkpoint(checkpoint_path);
  Model& model = *lr.model;
  ExperimentConfig cfg = model.cfg;
  if (seed_set) cfg.seed = seed;

  Dataset data;
  if (data_name.size() > 4 && data_name.substr(data_name.size() - 4) == ".csv")
    data = load_csv(data_name);
  else
    data = gen_dataset(data_name, cfg.seed);
  if (data.dimension != model.obs_dim)
    throw DimensionError("export: dataset dimension does not match the checkpoint");

  struct Row {
    std::string id;
    double time;
    Tensor z;
  };
  std::vector<Row> rows;
  std::vector<Tensor> latents;
  for (const Trajectory& raw : data.trajectories) {
    Trajectory nt = raw;
    for (auto& v : nt.values) v = normalize_point(model.norm, v);
    Tape tape;
    EncoderOutput eo = model.encoder.encode(tape, nt);
    const double t0 = nt.times.front(), tN = nt.times.back();
    const int n_micro = micro_step_count(nt.points() - 1, cfg.subintervals);
    const double dt = (tN - t0) / n_micro;
    LatentTrajectory traj = model.decoder.rollout(tape, eo.mu, t0, tN, dt, cfg.epochs);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      rows.push_back({raw.id, traj.times[i], traj.states[i].val()});
      latents.push_back(traj.states[i].val());
    }
  }

  const Pca2 pca = pca_fit_2d(latents);
  fs::path target(out_path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(target);
  if (!out) throw IoError("cannot open " + out_path + " for writing");
  out << "trajectory_id,time,pc1,pc2";
  for (int d = 0; d < model.cfg.latent_dim; ++d) out << ",z" << (d + 1);
  out << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (const Row& r : rows) {
    out << r.id;
    put(r.time);
    Tensor p = pca_project(pca, r.z);
    put(p[0]);
    put(p[1]);
    for (std::int64_t d = 0; d < r.z.numel(); ++d) put(r.z[d]);
    out << "\n";
  }
  if (!out) throw IoError("write failed for " + out_path);
  std::cout << "exported " << rows.size() << " latent states to " << out_path
            << " (explained variance " << pca.explained_ratio[0] << " + " << pca.explained_ratio[1]
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent mixture-of-symmetries toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads,
                 "worker threads; 1 is the bitwise-deterministic mode (and the only "
                 "implemented width, larger values run identically)")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", gen_kind, "spiral | glycolytic | lotka")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output file or directory")->required();

  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string train_config, train_data, train_report = "metrics.json",
              train_ckpt = "checkpoint.json";
  train->add_option("--config", train_config, "key = value run configuration")->required();
  train->add_option("--data", train_data, "CSV dataset overriding the config's dataset");
  train->add_option("--report", train_report, "metrics JSON path (also printed to stdout)");
  train->add_option("--checkpoint", train_ckpt, "checkpoint JSON path");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_task, eval_data, eval_report;
  double eval_drop = 0.0;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval->add_option("--task", eval_task, "interpolation | extrapolation");
  auto* drop_opt = eval->add_option("--drop", eval_drop, "observation drop rate");
  auto* seed_opt = eval->add_option("--seed", eval_seed, "masking/split seed");
  eval->add_option("--data", eval_data, "CSV dataset overriding the checkpoint's dataset");
  eval->add_option("--report", eval_report, "eval JSON path (also printed to stdout)");

  auto* verify = app.add_subcommand("verify", "run the algebra and gradient property suites");
  std::string verify_profile = "default";
  verify->add_option("--profile", verify_profile, "default | strict");

  auto* exp = app.add_subcommand("export-latent", "export latent trajectories with 2D PCA");
  std::string exp_ckpt, exp_data, exp_out;
  std::uint64_t exp_seed = 0;
  exp->add_option("--checkpoint", exp_ckpt, "trained checkpoint")->required();
  exp->add_option("--data", exp_data, "dataset kind or CSV path")->required();
  auto* exp_seed_opt = exp->add_option("--seed", exp_seed, "generation seed override");
  exp->add_option("--out", exp_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_kind, gen_seed, gen_out);
    if (train->parsed()) return cmd_train(train_config, train_data, train_report, train_ckpt);
    if (eval->parsed())
      return cmd_eval(eval_ckpt, eval_task, eval_drop, drop_opt->count() > 0, eval_seed,
                      seed_opt->count() > 0, eval_data, eval_report);
    if (verify->parsed()) return cmd_verify(verify_profile);
    if (exp->parsed())
      return cmd_export_latent(exp_ckpt, exp_data, exp_seed, exp_seed_opt->count() > 0, exp_out);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
