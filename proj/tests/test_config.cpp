#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "latentmos/config.hpp"
#include "latentmos/error.hpp"

using namespace lmos;

TEST_CASE("default config text round-trips to the default struct") {
  ExperimentConfig parsed = parse_config_text(default_config_text(), "defaults");
  ExperimentConfig d;
  CHECK(parsed.dataset == d.dataset);
  CHECK(parsed.task == d.task);
  CHECK(parsed.drop_rate == d.drop_rate);
  CHECK(parsed.latent_dim == d.latent_dim);
  CHECK(parsed.hidden == d.hidden);
  CHECK(parsed.subintervals == d.subintervals);
  CHECK(parsed.top_k == d.top_k);
  CHECK(parsed.warmup_epochs == d.warmup_epochs);
  CHECK(parsed.epochs == d.epochs);
  CHECK(parsed.learning_rate == d.learning_rate);
  CHECK(parsed.loss == d.loss);
  CHECK(parsed.beta == d.beta);
  CHECK(parsed.seed == d.seed);
  CHECK(parsed.split_fraction == d.split_fraction);
  CHECK(parsed.roster == d.roster);
}

TEST_CASE("all keys parse with comments and loose whitespace") {
  const std::string text =
      "# run setup\n"
      "\n"
      "dataset = lotka\n"
      "task=extrapolation\n"
      "  drop_rate =  0.6   # partial masking\n"
      "latent_dim = 8\n"
      "hidden = 12\n"
      "subintervals = 2, 5\n"
      "top_k = 3\n"
      "warmup_epochs = 4\n"
      "epochs = 7\n"
      "learning_rate = 0.01\n"
      "loss = elbo\n"
      "beta = 0.5\n"
      "seed = 42\n"
      "split_fraction = 0.75\n"
      "roster = translation\n";
  ExperimentConfig cfg = parse_config_text(text, "inline");
  CHECK(cfg.dataset == "lotka");
  CHECK(cfg.task == "extrapolation");
  CHECK(cfg.drop_rate == 0.6);
  CHECK(cfg.latent_dim == 8);
  CHECK(cfg.hidden == 12);
  CHECK(cfg.subintervals == std::vector<int>{2, 5});
  CHECK(cfg.top_k == 3);
  CHECK(cfg.warmup_epochs == 4);
  CHECK(cfg.epochs == 7);
  CHECK(cfg.learning_rate == 0.01);
  CHECK(cfg.loss == "elbo");
  CHECK(cfg.beta == 0.5);
  CHECK(cfg.seed == 42);
  CHECK(cfg.split_fraction == 0.75);
  CHECK(cfg.roster == "translation");
}

TEST_CASE("config parse errors carry origin and line") {
  CHECK_THROWS_WITH_AS(parse_config_text("lr = 0.1\n", "run.cfg"),
                       doctest::Contains("unknown key 'lr'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("\nepochs = 1\nepochs = 2\n", "run.cfg"),
                       doctest::Contains("run.cfg:3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("epochs\n", "run.cfg"),
                       doctest::Contains("expected 'key = value'"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("epochs =\n", "run.cfg"),
                       doctest::Contains("missing value"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("epochs = five\n", "run.cfg"),
                       doctest::Contains("not an integer"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("drop_rate = high\n", "run.cfg"),
                       doctest::Contains("not a number"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("subintervals = 2,,5\n", "run.cfg"),
                       doctest::Contains("empty entry"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("seed = -3\n", "run.cfg"),
                       doctest::Contains("non-negative"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("= 3\n", "run.cfg"), doctest::Contains("missing key"),
                       ConfigError);
  // Parsed values still pass through semantic validation.
  CHECK_THROWS_AS(parse_config_text("drop_rate = 1.0\n", "run.cfg"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("loss = huber\n", "run.cfg"), ConfigError);
}

TEST_CASE("load_config reads files and reports missing ones") {
  const std::string path = "cfg_probe.cfg";
  {
    std::ofstream out(path);
    out << "epochs = 3\nseed = 9\n";
  }
  ExperimentConfig cfg = load_config(path);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.seed == 9);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("definitely_missing.cfg"), IoError);
}

TEST_CASE("environment variables override config keys") {
  ExperimentConfig cfg;
  REQUIRE(setenv("LMOS_EPOCHS", "5", 1) == 0);
  REQUIRE(setenv("LMOS_LEARNING_RATE", "0.25", 1) == 0);
  apply_env_overrides(cfg);
  CHECK(cfg.epochs == 5);
  CHECK(cfg.learning_rate == 0.25);

  REQUIRE(setenv("LMOS_EPOCHS", "soon", 1) == 0);
  CHECK_THROWS_WITH_AS(apply_env_overrides(cfg), doctest::Contains("LMOS_EPOCHS"), ConfigError);

  unsetenv("LMOS_EPOCHS");
  unsetenv("LMOS_LEARNING_RATE");
  ExperimentConfig fresh;
  apply_env_overrides(fresh);
  CHECK(fresh.epochs == ExperimentConfig{}.epochs);
}
