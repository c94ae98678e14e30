#include <fstream>
#include <vector>

#include "json.hpp"
#include "latentmos/error.hpp"
#include "latentmos/training.hpp"

namespace lmos {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json tensor_to_json(const Tensor& t) {
  std::vector<double> v(static_cast<std::size_t>(t.numel()));
  for (std::int64_t i = 0; i < t.numel(); ++i) v[static_cast<std::size_t>(i)] = t[i];
  return json(v);
}

void fill_tensor(Tensor& t, const json& j, const std::string& what) {
  if (!j.is_array() || static_cast<std::int64_t>(j.size()) != t.numel())
    throw IoError("checkpoint: " + what + " has wrong length");
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = j[static_cast<std::size_t>(i)].get<double>();
}

json config_to_json(const ExperimentConfig& cfg) {
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

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.dataset = j.at("dataset").get<std::string>();
  cfg.task = j.at("task").get<std::string>();
  cfg.drop_rate = j.at("drop_rate").get<double>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.subintervals = j.at("subintervals").get<std::vector<int>>();
  cfg.top_k = j.at("top_k").get<int>();
  cfg.warmup_epochs = j.at("warmup_epochs").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.loss = j.at("loss").get<std::string>();
  cfg.beta = j.at("beta").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.split_fraction = j.at("split_fraction").get<double>();
  cfg.roster = j.at("roster").get<std::string>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const Adam& adam,
                     const Rng& noise, int epoch) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "latentmos-checkpoint";
  j["epoch"] = epoch;
  j["obs_dim"] = model.obs_dim;
  j["config"] = config_to_json(model.cfg);

  json jn;
  jn["mean"] = tensor_to_json(model.norm.mean);
  jn["stddev"] = tensor_to_json(model.norm.stddev);
  std::vector<int> scaled(model.norm.scaled.begin(), model.norm.scaled.end());
  jn["scaled"] = scaled;
  j["normalization"] = jn;

  json jp = json::object();
  for (const Parameter* p : model.params) jp[p->name] = tensor_to_json(p->value);
  j["params"] = jp;

  json ja;
  ja["step"] = adam.step;
  json m1 = json::array(), m2 = json::array();
  for (const Tensor& t : adam.m1) m1.push_back(tensor_to_json(t));
  for (const Tensor& t : adam.m2) m2.push_back(tensor_to_json(t));
  ja["m1"] = m1;
  ja["m2"] = m2;
  j["adam"] = ja;

  const Rng::State st = noise.save();
  json jr;
  jr["state"] = std::vector<std::uint64_t>(st.s.begin(), st.s.end());
  jr["has_spare"] = st.has_spare;
  jr["spare"] = st.spare;
  j["noise"] = jr;

  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

LoadedRun load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("checkpoint: " + path + " is not valid JSON (" + e.what() + ")");
  }

  try {
    if (j.at("kind").get<std::string>() != "latentmos-checkpoint")
      throw IoError("checkpoint: " + path + " is not a checkpoint file");
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw IoError("checkpoint: unsupported schema version in " + path);

    LoadedRun run;
    run.epoch = j.at("epoch").get<int>();
    const ExperimentConfig cfg = config_from_json(j.at("config"));
    const int obs_dim = j.at("obs_dim").get<int>();
    run.model = make_model(cfg, obs_dim);

    const json& jn = j.at("normalization");
    fill_tensor(run.model->norm.mean, jn.at("mean"), "normalization mean");
    fill_tensor(run.model->norm.stddev, jn.at("stddev"), "normalization stddev");
    const auto scaled = jn.at("scaled").get<std::vector<int>>();
    if (scaled.size() != run.model->norm.scaled.size())
      throw IoError("checkpoint: normalization flag count mismatch");
    for (std::size_t i = 0; i < scaled.size(); ++i)
      run.model->norm.scaled[i] = static_cast<char>(scaled[i]);

    const json& jp = j.at("params");
    for (Parameter* p : run.model->params) {
      if (!jp.contains(p->name)) throw IoError("checkpoint: missing parameter " + p->name);
      fill_tensor(p->value, jp.at(p->name), "parameter " + p->name);
    }
    if (jp.size() != run.model->params.size())
      throw IoError("checkpoint: parameter set does not match this configuration");

    const json& ja = j.at("adam");
    run.adam.lr = cfg.learning_rate;
    run.adam.attach(run.model->params);
    run.adam.step = ja.at("step").get<std::int64_t>();
    const json& m1 = ja.at("m1");
    const json& m2 = ja.at("m2");
    if (m1.size() != run.adam.m1.size() || m2.size() != run.adam.m2.size())
      throw IoError("checkpoint: optimizer moment count mismatch");
    for (std::size_t i = 0; i < run.adam.m1.size(); ++i) {
      fill_tensor(run.adam.m1[i], m1[i], "optimizer moment");
      fill_tensor(run.adam.m2[i], m2[i], "optimizer moment");
    }

    const json& jr = j.at("noise");
    const auto words = jr.at("state").get<std::vector<std::uint64_t>>();
    if (words.size() != 4) throw IoError("checkpoint: noise state must have 4 words");
    Rng::State st;
    std::copy(words.begin(), words.end(), st.s.begin());
    st.has_spare = jr.at("has_spare").get<bool>();
    st.spare = jr.at("spare").get<double>();
    run.noise.restore(st);
    return run;
  } catch (const json::exception& e) {
    throw IoError("checkpoint: " + path + " is malformed (" + e.what() + ")");
  }
}

}  // namespace lmos
