#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "latentmos/dataset.hpp"
#include "latentmos/dynamics.hpp"
#include "latentmos/error.hpp"

using namespace lmos;

namespace {

// Closed-form spiral solution: x(t) = e^{-0.1 t} R(t) x0.
std::vector<double> spiral_exact(const std::vector<double>& x0, double t) {
  const double decay = std::exp(-0.1 * t);
  const double c = std::cos(t), s = std::sin(t);
  return {decay * (c * x0[0] - s * x0[1]), decay * (s * x0[0] + c * x0[1])};
}

double spiral_max_error(double dt, double horizon) {
  OdeSystem sys = spiral_system();
  const std::vector<double> x0{1.0, 0.0};
  const int steps = static_cast<int>(std::lround(horizon / dt));
  auto grid = integrate(sys, x0, steps, dt);
  double worst = 0.0;
  for (int k = 0; k <= steps; ++k) {
    auto exact = spiral_exact(x0, k * dt);
    for (int d = 0; d < 2; ++d)
      worst = std::max(worst, std::abs(grid[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] - exact[static_cast<std::size_t>(d)]));
  }
  return worst;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("rk4 spiral trajectory matches the closed form at fourth order") {
  const double coarse = spiral_max_error(0.02, 1.0);
  const double fine = spiral_max_error(0.01, 1.0);
  CHECK(fine < 1e-8);
  const double ratio = coarse / fine;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("fixed points stay fixed over long horizons") {
  {
    auto grid = integrate(glycolytic_system(), {0.75 / 0.6625, 0.75}, 200, 0.1);
    for (const auto& x : grid) {
      CHECK(std::abs(x[0] - 0.75 / 0.6625) < 1e-9);
      CHECK(std::abs(x[1] - 0.75) < 1e-9);
    }
  }
  {
    auto grid = integrate(lotka_system(), {30.0, 5.0}, 200, 0.5);
    for (const auto& x : grid) {
      CHECK(std::abs(x[0] - 30.0) < 1e-9);
      CHECK(std::abs(x[1] - 5.0) < 1e-9);
    }
  }
}

TEST_CASE("integrate reports divergence with the step index") {
  OdeSystem blowup{"blowup", 1, [](double, const std::vector<double>& x, std::vector<double>& dx) {
                     dx[0] = x[0] * x[0];
                   }};
  CHECK_THROWS_WITH_AS(static_cast<void>(integrate(blowup, {3.0}, 50, 1.0)),
                       doctest::Contains("step"), DivergenceError);
  CHECK_THROWS_AS(static_cast<void>(integrate(spiral_system(), {1.0}, 10, 0.1)), DimensionError);
  CHECK_THROWS_AS(static_cast<void>(integrate(spiral_system(), {1.0, 0.0}, 10, 0.0)), DomainError);
}

TEST_CASE("gen_dataset produces the documented shapes deterministically") {
  Dataset spiral = gen_dataset("spiral", 11);
  CHECK(spiral.trajectories.size() == 80);
  for (const auto& t : spiral.trajectories) CHECK(t.points() == 61);
  CHECK(spiral.dimension == 2);
  CHECK(spiral.dt == 0.1);

  Dataset glyc = gen_dataset("glycolytic", 11);
  CHECK(glyc.trajectories.size() == 100);
  CHECK(glyc.trajectories[0].points() == 201);

  Dataset again = gen_dataset("spiral", 11);
  for (std::size_t i = 0; i < spiral.trajectories.size(); ++i)
    for (int k = 0; k < spiral.trajectories[i].points(); ++k)
      for (int d = 0; d < 2; ++d)
        CHECK(spiral.trajectories[i].values[static_cast<std::size_t>(k)][d] ==
              again.trajectories[i].values[static_cast<std::size_t>(k)][d]);

  Dataset other = gen_dataset("spiral", 12);
  CHECK(other.trajectories[0].values[0][0] != spiral.trajectories[0].values[0][0]);

  CHECK_THROWS_AS(gen_dataset("pendulum", 1), ConfigError);
}

TEST_CASE("glycolytic and lotka trajectories stay in the positive quadrant") {
  for (const char* kind : {"glycolytic", "lotka"}) {
    Dataset ds = gen_dataset(kind, 3);
    for (const auto& t : ds.trajectories)
      for (const auto& v : t.values)
        for (std::int64_t d = 0; d < v.numel(); ++d) CHECK(v[d] > 0.0);
  }
}

TEST_CASE("csv save/load round-trips bit-exactly with sidecar metadata") {
  Dataset ds = gen_dataset("spiral", 21);
  apply_observation_drop(ds, 0.5, TaskKind::kInterpolation, 21);
  const std::string path = temp_path("lmos_roundtrip.csv");
  save_csv(ds, path);
  Dataset back = load_csv(path);

  CHECK(back.dimension == ds.dimension);
  CHECK(back.system == "spiral");  // recovered from the sidecar
  CHECK(back.seed == ds.seed);
  CHECK(back.dt == ds.dt);
  REQUIRE(back.trajectories.size() == ds.trajectories.size());
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const Trajectory& a = ds.trajectories[i];
    const Trajectory& b = back.trajectories[i];
    CHECK(a.id == b.id);
    REQUIRE(a.points() == b.points());
    for (int k = 0; k < a.points(); ++k) {
      auto uk = static_cast<std::size_t>(k);
      CHECK(a.times[uk] == b.times[uk]);
      CHECK(a.mask[uk] == b.mask[uk]);
      for (int d = 0; d < ds.dimension; ++d) CHECK(a.values[uk][d] == b.values[uk][d]);
    }
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".meta.json");
}

TEST_CASE("csv loader rejects malformed input with line numbers") {
  const std::string path = temp_path("lmos_bad.csv");
  auto write = [&](const std::string& text) {
    std::ofstream out(path);
    out << text;
  };

  write("");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains("empty"), IoError);

  write("id,time,x1,observed\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains(":1:"), IoError);

  write("trajectory_id,time,x1,observed\na,0.0,1.0\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains(":2:"), IoError);

  write("trajectory_id,time,x1,observed\na,0.0,oops,1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains("bad value"), IoError);

  write("trajectory_id,time,x1,observed\na,0.0,1.0,1\na,0.0,2.0,1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains("does not increase"),
                       IoError);

  write("trajectory_id,time,x1,observed\na,0.0,1.0,2\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains("observed"), IoError);

  write("trajectory_id,time,x1,observed\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(path)), doctest::Contains("no data rows"),
                       IoError);

  std::filesystem::remove(path);
}

TEST_CASE("interpolation drop keeps the documented count and the first point") {
  Dataset ds = gen_dataset("spiral", 31);
  apply_observation_drop(ds, 0.9, TaskKind::kInterpolation, 31);
  for (const auto& t : ds.trajectories) {
    int kept = 0;
    for (char m : t.mask) kept += m;
    CHECK(kept == 6);  // round(0.1 * 61)
    CHECK(t.mask[0] == 1);
  }

  // Deterministic in the seed; sensitive to it.
  Dataset ds2 = gen_dataset("spiral", 31);
  apply_observation_drop(ds2, 0.9, TaskKind::kInterpolation, 31);
  Dataset ds3 = gen_dataset("spiral", 31);
  apply_observation_drop(ds3, 0.9, TaskKind::kInterpolation, 99);
  bool any_diff = false;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    CHECK(ds.trajectories[i].mask == ds2.trajectories[i].mask);
    if (ds.trajectories[i].mask != ds3.trajectories[i].mask) any_diff = true;
  }
  CHECK(any_diff);

  CHECK_THROWS_AS(apply_observation_drop(ds, 1.0, TaskKind::kInterpolation, 1), ConfigError);
}

TEST_CASE("extrapolation drop hides the whole second half") {
  Dataset ds = gen_dataset("spiral", 41);
  apply_observation_drop(ds, 0.9, TaskKind::kExtrapolation, 41);
  const int half = extrapolation_split_index(61);
  CHECK(half == 31);
  for (const auto& t : ds.trajectories) {
    int kept_first = 0;
    for (int i = 0; i < half; ++i) kept_first += t.mask[static_cast<std::size_t>(i)];
    for (int i = half; i < t.points(); ++i) CHECK(t.mask[static_cast<std::size_t>(i)] == 0);
    CHECK(kept_first == 3);  // round(0.1 * 31)
    CHECK(t.mask[0] == 1);
  }
}

TEST_CASE("trajectory split is deterministic, disjoint, and sized correctly") {
  Dataset ds = gen_dataset("spiral", 51);
  SplitIndices s1 = split_trajectories(ds, 0.8, 51);
  SplitIndices s2 = split_trajectories(ds, 0.8, 51);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);
  CHECK(s1.train.size() == 64);
  CHECK(s1.test.size() == 16);
  std::vector<char> seen(80, 0);
  for (int i : s1.train) seen[static_cast<std::size_t>(i)] += 1;
  for (int i : s1.test) seen[static_cast<std::size_t>(i)] += 1;
  for (char c : seen) CHECK(c == 1);
}

TEST_CASE("normalization round-trips and passes constant dimensions through") {
  Dataset ds;
  ds.dimension = 2;
  Trajectory t;
  t.id = "a";
  for (int i = 0; i < 5; ++i) {
    t.times.push_back(i);
    t.values.push_back(Tensor::vector({static_cast<double>(i) * 2.0, 7.0}));
    t.mask.push_back(1);
  }
  ds.trajectories.push_back(t);

  Normalization norm = compute_normalization(ds, {0});
  CHECK(norm.scaled[0] == 1);
  CHECK(norm.scaled[1] == 0);  // constant dimension

  const Tensor x = Tensor::vector({6.0, 7.0});
  Tensor xn = normalize_point(norm, x);
  CHECK(xn[1] == 7.0);  // passthrough
  Tensor back = denormalize_point(norm, xn);
  for (int d = 0; d < 2; ++d) CHECK(std::abs(back[d] - x[d]) < 1e-12);

  // Normalized observed data has zero mean and unit variance.
  double s = 0.0, s2 = 0.0;
  for (const auto& v : ds.trajectories[0].values) {
    const double z = normalize_point(norm, v)[0];
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / 5.0) < 1e-12);
  CHECK(std::abs(s2 / 5.0 - 1.0) < 1e-12);
}
