#include "latentmos/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "latentmos/error.hpp"

namespace lmos {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not an integer");
  }
  if (used != v.size()) throw ConfigError(where + ": '" + v + "' is not an integer");
  return x;
}

double parse_real(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not a number");
  }
  if (used != v.size()) throw ConfigError(where + ": '" + v + "' is not a number");
  return x;
}

std::uint64_t parse_seed(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": '" + v + "' is not a non-negative integer");
  }
  if (used != v.size() || v.find('-') != std::string::npos)
    throw ConfigError(where + ": '" + v + "' is not a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

std::vector<int> parse_int_list(const std::string& v, const std::string& where) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(where + ": empty entry in list '" + v + "'");
    out.push_back(static_cast<int>(parse_int(item, where)));
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

// One assignment; returns false when the key is unknown.
bool assign(ExperimentConfig& cfg, const std::string& key, const std::string& value,
            const std::string& where) {
  if (key == "dataset") cfg.dataset = value;
  else if (key == "task") cfg.task = value;
  else if (key == "drop_rate") cfg.drop_rate = parse_real(value, where);
  else if (key == "latent_dim") cfg.latent_dim = static_cast<int>(parse_int(value, where));
  else if (key == "hidden") cfg.hidden = static_cast<int>(parse_int(value, where));
  else if (key == "subintervals") cfg.subintervals = parse_int_list(value, where);
  else if (key == "top_k") cfg.top_k = static_cast<int>(parse_int(value, where));
  else if (key == "warmup_epochs") cfg.warmup_epochs = static_cast<int>(parse_int(value, where));
  else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(value, where));
  else if (key == "learning_rate") cfg.learning_rate = parse_real(value, where);
  else if (key == "loss") cfg.loss = value;
  else if (key == "beta") cfg.beta = parse_real(value, where);
  else if (key == "seed") cfg.seed = parse_seed(value, where);
  else if (key == "split_fraction") cfg.split_fraction = parse_real(value, where);
  else if (key == "roster") cfg.roster = value;
  else return false;
  return true;
}

const char* kKeys[] = {"dataset",       "task",  "drop_rate",     "latent_dim",
                       "hidden",        "subintervals", "top_k",  "warmup_epochs",
                       "epochs",        "learning_rate", "loss",  "beta",
                       "seed",          "split_fraction", "roster"};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (value.empty()) throw ConfigError(where + ": missing value for '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    if (!assign(cfg, key, value, where)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_config_text(buf.str(), path);
  apply_env_overrides(cfg);
  return cfg;
}

void apply_env_overrides(ExperimentConfig& cfg) {
  for (const char* key : kKeys) {
    std::string env = "LMOS_";
    for (const char* c = key; *c; ++c)
      env += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
    const char* value = std::getenv(env.c_str());
    if (value == nullptr) continue;
    assign(cfg, key, trim(value), "environment " + env);
  }
  validate(cfg);
}

std::string default_config_text() {
  const ExperimentConfig d;
  std::ostringstream out;
  out << "# Run configuration; every key shown with its default.\n";
  out << "dataset = " << d.dataset << "\n";
  out << "task = " << d.task << "\n";
  out << "drop_rate = " << d.drop_rate << "\n";
  out << "latent_dim = " << d.latent_dim << "\n";
  out << "hidden = " << d.hidden << "\n";
  out << "subintervals = ";
  for (std::size_t i = 0; i < d.subintervals.size(); ++i)
    out << (i ? "," : "") << d.subintervals[i];
  out << "\n";
  out << "top_k = " << d.top_k << "\n";
  out << "warmup_epochs = " << d.warmup_epochs << "\n";
  out << "epochs = " << d.epochs << "\n";
  out << "learning_rate = " << d.learning_rate << "\n";
  out << "loss = " << d.loss << "\n";
  out << "beta = " << d.beta << "\n";
  out << "seed = " << d.seed << "\n";
  out << "split_fraction = " << d.split_fraction << "\n";
  out << "roster = " << d.roster << "\n";
  return out.str();
}

}  // namespace lmos
