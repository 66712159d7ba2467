#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "teql/config.hpp"
#include "teql/error.hpp"

using namespace teql;
using nlohmann::json;

TEST_CASE("config survives a JSON round trip") {
  for (const std::string env : {"cartpole", "pendulum"}) {
    RunConfig cfg = default_config(env);
    cfg.experiment = ExperimentKind::ablation_penalty;
    cfg.episodes = 77;
    cfg.learner.alpha0 = 0.01;
    cfg.learner.max_step_gain.reset();
    cfg.policy.exploration_c = 1.5;
    cfg.analysis.reference = ThresholdReference::shared;
    CHECK(config_from_json(config_to_json(cfg)) == cfg);

    cfg.auto_penalty = false;
    cfg.learner.penalty_weight = 0.2;
    cfg.auto_q_clip = false;
    cfg.learner.q_clip = 5.0;
    CHECK(config_from_json(config_to_json(cfg)) == cfg);
  }
}

TEST_CASE("partial configs override defaults") {
  const RunConfig cfg = config_from_json(json::parse(R"({
    "environment": "pendulum",
    "episodes": 40,
    "learner": {"lambda": 0.3, "gamma": 0.95},
    "policy": {"kind": "ucb"},
    "discretization": {"state": [[-3.14159, 3.14159, 8], {"min": -8, "max": 8, "bins": 8}],
                       "action": [[-2, 2, 4]]}
  })"));
  CHECK(cfg.environment == "pendulum");
  CHECK(cfg.episodes == 40);
  CHECK(cfg.learner.penalty_weight == 0.3);
  CHECK_FALSE(cfg.auto_penalty);
  CHECK(cfg.learner.gamma == 0.95);
  CHECK(cfg.policy.kind == PolicyKind::ucb);
  CHECK(cfg.discretization.total_pairs() == 256);
  CHECK(cfg.baseline_policy.epsilon0 == 1.0);
  CHECK(cfg.max_steps == 100);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"episdoes": 10})")), PreconditionError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"learner": {"alpha": 0.1}})")), PreconditionError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"policy": {"kind": "boltzmann"}})")), PreconditionError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"discretization": {"state": [[0, 1]]}})")), PreconditionError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"episodes": 0})")), PreconditionError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"analysis": {"threshold_reference": "x"}})")), PreconditionError);
}

TEST_CASE("config files load and save") {
  const auto path = std::filesystem::temp_directory_path() / "teql_config_test.json";
  RunConfig cfg = default_config("pendulum");
  cfg.seeds = 4;
  save_config(cfg, path);
  CHECK(load_config(path) == cfg);
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path), PreconditionError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), PreconditionError);
}
