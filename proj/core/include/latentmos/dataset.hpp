#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentmos/tensor.hpp"

namespace lmos {

/// One irregularly observable trajectory on a time grid. `mask[i]` marks
/// whether point i is visible to the encoder; ground-truth values are kept
/// for every grid point.
struct Trajectory {
  std::string id;
  std::vector<double> times;   // strictly increasing
  std::vector<Tensor> values;  // state per time, dimension n
  std::vector<char> mask;      // 1 = observed

  int points() const { return static_cast<int>(times.size()); }
};

/// Per-dimension affine normalization. Dimensions with no spread pass
/// through unscaled and are flagged.
struct Normalization {
  Tensor mean;
  Tensor stddev;
  std::vector<char> scaled;  // 0 = passthrough (constant dimension)
};

struct Dataset {
  std::string system;  // "spiral" | "glycolytic" | "lotka" | "csv"
  int dimension = 0;
  double dt = 0.0;  // uniform grid spacing; 0 for irregular external data
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;
};

enum class TaskKind { kInterpolation, kExtrapolation };

TaskKind parse_task(const std::string& name);
std::string task_name(TaskKind task);

/// Built-in synthetic sets: spiral (80 x 61 points, dt 0.1), glycolytic
/// (100 x 201, dt 0.1), lotka (100 x 201, dt 0.5). Deterministic in the
/// seed; every point starts observed.
Dataset gen_dataset(const std::string& kind, std::uint64_t seed);

/// Schema: `trajectory_id,time,x1,...,xn,observed` with float64 values
/// emitted at 17 significant digits, so save/load round-trips bit-exactly.
/// save_csv also writes `<path>.meta.json` (counts, grid, seed, system).
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

/// Observation drop. Interpolation: keeps round((1-rate)*n_points) points of
/// the whole grid. Extrapolation: hides the entire second half and keeps
/// round((1-rate)*n_first) points of the first half. The first point always
/// stays observed; selection is uniform without replacement, deterministic in
/// the seed (substream "mask", per trajectory).
void apply_observation_drop(Dataset& ds, double rate, TaskKind task, std::uint64_t seed);

/// First grid index of the extrapolation target segment (second half).
int extrapolation_split_index(int n_points);

/// Deterministic shuffled split by trajectory (substream "split").
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};
SplitIndices split_trajectories(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Stats over the observed entries of the listed trajectories.
Normalization compute_normalization(const Dataset& ds, const std::vector<int>& trajectory_ids);

Tensor normalize_point(const Normalization& n, const Tensor& x);
Tensor denormalize_point(const Normalization& n, const Tensor& x);

}  // namespace lmos
