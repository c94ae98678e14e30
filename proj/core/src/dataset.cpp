#include "latentmos/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "latentmos/dynamics.hpp"
#include "latentmos/error.hpp"
#include "latentmos/rng.hpp"

namespace lmos {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GenSpec {
  OdeSystem system;
  int count;
  int steps;
  double dt;
};

GenSpec spec_for(const std::string& kind) {
  if (kind == "spiral") return {spiral_system(), 80, 60, 0.1};
  if (kind == "glycolytic") return {glycolytic_system(), 100, 200, 0.1};
  if (kind == "lotka") return {lotka_system(), 100, 200, 0.5};
  throw ConfigError("unknown dataset kind '" + kind +
                    "' (expected spiral, glycolytic or lotka)");
}

std::vector<double> draw_initial(const std::string& kind, Rng& rng) {
  if (kind == "spiral") {
    const double r = rng.uniform(1.5, 2.5);
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return {r * std::cos(a), r * std::sin(a)};
  }
  if (kind == "glycolytic") return {rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)};
  return {rng.uniform(10.0, 50.0), rng.uniform(2.0, 8.0)};
}

}  // namespace

TaskKind parse_task(const std::string& name) {
  if (name == "interpolation") return TaskKind::kInterpolation;
  if (name == "extrapolation") return TaskKind::kExtrapolation;
  throw ConfigError("unknown task '" + name + "' (expected interpolation or extrapolation)");
}

std::string task_name(TaskKind task) {
  return task == TaskKind::kInterpolation ? "interpolation" : "extrapolation";
}

Dataset gen_dataset(const std::string& kind, std::uint64_t seed) {
  const GenSpec spec = spec_for(kind);
  Dataset ds;
  ds.system = kind;
  ds.dimension = spec.system.dim;
  ds.dt = spec.dt;
  ds.seed = seed;
  ds.trajectories.reserve(static_cast<std::size_t>(spec.count));
  for (int idx = 0; idx < spec.count; ++idx) {
    Rng rng = Rng::substream(seed, "data/" + kind + "/" + std::to_string(idx));
    auto states = integrate(spec.system, draw_initial(kind, rng), spec.steps, spec.dt);
    Trajectory t;
    char id[32];
    std::snprintf(id, sizeof id, "traj_%03d", idx);
    t.id = id;
    t.times.reserve(states.size());
    t.values.reserve(states.size());
    t.mask.assign(states.size(), 1);
    for (std::size_t k = 0; k < states.size(); ++k) {
      t.times.push_back(static_cast<double>(k) * spec.dt);
      t.values.push_back(Tensor::vector(states[k]));
    }
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "trajectory_id,time";
  for (int d = 0; d < ds.dimension; ++d) out << ",x" << (d + 1);
  out << ",observed\n";
  for (const Trajectory& t : ds.trajectories) {
    for (int i = 0; i < t.points(); ++i) {
      out << t.id << ',' << format_double(t.times[static_cast<std::size_t>(i)]);
      for (int d = 0; d < ds.dimension; ++d)
        out << ',' << format_double(t.values[static_cast<std::size_t>(i)][d]);
      out << ',' << (t.mask[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError("write failure on '" + path + "'");
  out.close();

  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["system"] = ds.system;
  meta["dimension"] = ds.dimension;
  meta["dt"] = ds.dt;
  meta["seed"] = ds.seed;
  meta["trajectory_count"] = ds.trajectories.size();
  std::vector<int> points;
  points.reserve(ds.trajectories.size());
  for (const Trajectory& t : ds.trajectories) points.push_back(t.points());
  meta["points_per_trajectory"] = points;
  std::ofstream side(path + ".meta.json");
  if (!side) throw IoError("cannot open '" + path + ".meta.json' for writing");
  side << meta.dump(2) << '\n';
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ":1: parse error, empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Header fixes the dimension.
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 4 || cols.front() != "trajectory_id" || cols[1] != "time" ||
      cols.back() != "observed")
    throw IoError(path + ":1: parse error, header must be trajectory_id,time,x1,...,xn,observed");
  const int dim = static_cast<int>(cols.size()) - 3;
  for (int d = 0; d < dim; ++d)
    if (cols[static_cast<std::size_t>(d) + 2] != "x" + std::to_string(d + 1))
      throw IoError(path + ":1: parse error, state column " + std::to_string(d + 3) +
                    " must be named x" + std::to_string(d + 1));

  Dataset ds;
  ds.system = "csv";
  ds.dimension = dim;

  std::map<std::string, std::size_t> slot;  // id -> index into trajectories
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    {
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cells.push_back(c);
    }
    const std::string where = path + ":" + std::to_string(lineno);
    if (static_cast<int>(cells.size()) != dim + 3)
      throw IoError(where + ": parse error, expected " + std::to_string(dim + 3) +
                    " columns, got " + std::to_string(cells.size()));

    auto parse_num = [&](const std::string& s, const char* what) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw IoError(where + ": parse error, bad " + what + " '" + s + "'");
      }
      if (used != s.size()) throw IoError(where + ": parse error, bad " + what + " '" + s + "'");
      return v;
    };

    const std::string& id = cells[0];
    const double time = parse_num(cells[1], "time");
    Tensor v = Tensor::zeros({dim});
    for (int d = 0; d < dim; ++d) v[d] = parse_num(cells[static_cast<std::size_t>(d) + 2], "value");
    const std::string& obs = cells.back();
    if (obs != "0" && obs != "1")
      throw IoError(where + ": parse error, observed must be 0 or 1, got '" + obs + "'");

    auto it = slot.find(id);
    if (it == slot.end()) {
      it = slot.emplace(id, ds.trajectories.size()).first;
      ds.trajectories.push_back(Trajectory{id, {}, {}, {}});
    }
    Trajectory& t = ds.trajectories[it->second];
    if (!t.times.empty() && time <= t.times.back())
      throw IoError(where + ": validation error, time " + format_double(time) +
                    " does not increase within trajectory '" + id + "'");
    t.times.push_back(time);
    t.values.push_back(std::move(v));
    t.mask.push_back(obs == "1" ? 1 : 0);
  }
  if (ds.trajectories.empty()) throw IoError(path + ": parse error, no data rows");

  // Uniform grid detection; irregular external data keeps dt = 0.
  double dt = 0.0;
  bool uniform = true;
  for (const Trajectory& t : ds.trajectories) {
    for (std::size_t i = 1; i < t.times.size(); ++i) {
      const double gap = t.times[i] - t.times[i - 1];
      if (dt == 0.0) dt = gap;
      if (std::abs(gap - dt) > 1e-12 * std::max(1.0, std::abs(dt))) uniform = false;
    }
  }
  ds.dt = uniform ? dt : 0.0;

  std::ifstream side(path + ".meta.json");
  if (side) {
    try {
      nlohmann::json meta = nlohmann::json::parse(side);
      if (meta.contains("system")) ds.system = meta["system"].get<std::string>();
      if (meta.contains("seed")) ds.seed = meta["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ".meta.json: parse error, " + std::string(e.what()));
    }
  }
  return ds;
}

int extrapolation_split_index(int n_points) { return (n_points + 1) / 2; }

namespace {

std::vector<char> drop_one(int n_points, double rate, Rng& rng) {
  long keep = std::lround((1.0 - rate) * n_points);
  if (keep < 1) keep = 1;
  if (keep > n_points) keep = n_points;
  std::vector<char> mask(static_cast<std::size_t>(n_points), 0);
  mask[0] = 1;
  if (keep > 1) {
    auto rest = rng.sample_without_replacement(n_points - 1, keep - 1);
    for (int idx : rest) mask[static_cast<std::size_t>(idx) + 1] = 1;
  }
  return mask;
}

}  // namespace

void apply_observation_drop(Dataset& ds, double rate, TaskKind task, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ConfigError("drop rate " + std::to_string(rate) + " outside [0, 1)");
  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    Trajectory& t = ds.trajectories[k];
    Rng rng = Rng::substream(seed, "mask/" + t.id);
    const int n = t.points();
    if (task == TaskKind::kInterpolation) {
      t.mask = drop_one(n, rate, rng);
    } else {
      const int half = extrapolation_split_index(n);
      std::vector<char> first = drop_one(half, rate, rng);
      t.mask.assign(static_cast<std::size_t>(n), 0);
      for (int i = 0; i < half; ++i) t.mask[static_cast<std::size_t>(i)] = first[static_cast<std::size_t>(i)];
    }
  }
}

SplitIndices split_trajectories(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie in (0, 1)");
  const int count = static_cast<int>(ds.trajectories.size());
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = Rng::substream(seed, "split");
  rng.shuffle(order);
  int train_count = static_cast<int>(std::lround(train_fraction * count));
  if (train_count < 1) train_count = 1;
  if (train_count >= count) train_count = count - 1;
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + train_count);
  split.test.assign(order.begin() + train_count, order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Normalization compute_normalization(const Dataset& ds, const std::vector<int>& trajectory_ids) {
  const int dim = ds.dimension;
  Normalization norm;
  norm.mean = Tensor::zeros({dim});
  norm.stddev = Tensor::full({dim}, 1.0);
  norm.scaled.assign(static_cast<std::size_t>(dim), 1);

  std::vector<double> sum(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> sumsq(static_cast<std::size_t>(dim), 0.0);
  std::int64_t count = 0;
  for (int ti : trajectory_ids) {
    const Trajectory& t = ds.trajectories[static_cast<std::size_t>(ti)];
    for (int i = 0; i < t.points(); ++i) {
      if (!t.mask[static_cast<std::size_t>(i)]) continue;
      ++count;
      for (int d = 0; d < dim; ++d) {
        const double v = t.values[static_cast<std::size_t>(i)][d];
        sum[static_cast<std::size_t>(d)] += v;
        sumsq[static_cast<std::size_t>(d)] += v * v;
      }
    }
  }
  if (count == 0) throw ContractError("compute_normalization: no observed points");
  for (int d = 0; d < dim; ++d) {
    const double mean = sum[static_cast<std::size_t>(d)] / static_cast<double>(count);
    const double var =
        std::max(0.0, sumsq[static_cast<std::size_t>(d)] / static_cast<double>(count) - mean * mean);
    const double sd = std::sqrt(var);
    if (sd < 1e-12) {
      norm.scaled[static_cast<std::size_t>(d)] = 0;  // constant dimension passes through
      norm.mean[d] = 0.0;
      norm.stddev[d] = 1.0;
    } else {
      norm.mean[d] = mean;
      norm.stddev[d] = sd;
    }
  }
  return norm;
}

Tensor normalize_point(const Normalization& n, const Tensor& x) {
  Tensor out = x;
  for (std::int64_t d = 0; d < x.numel(); ++d) out[d] = (x[d] - n.mean[d]) / n.stddev[d];
  return out;
}

Tensor denormalize_point(const Normalization& n, const Tensor& x) {
  Tensor out = x;
  for (std::int64_t d = 0; d < x.numel(); ++d) out[d] = x[d] * n.stddev[d] + n.mean[d];
  return out;
}

}  // namespace lmos
