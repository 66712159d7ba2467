#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "teql/config.hpp"
#include "teql/error.hpp"
#include "teql/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> environment;
  std::optional<std::string> output;
  std::optional<int> seeds;
  std::optional<int> episodes;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--env", f.environment, "cartpole or pendulum");
  cmd->add_option("--output", f.output, "Output directory");
  cmd->add_option("--seeds", f.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--episodes", f.episodes, "Episodes per seed")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", f.workers, "OpenMP worker threads (0 = default)")
      ->check(CLI::NonNegativeNumber);
}

teql::RunConfig resolve(const CommonFlags& f) {
  teql::RunConfig cfg = f.config_path.empty()
                            ? teql::default_config(f.environment.value_or("cartpole"))
                            : teql::load_config(f.config_path);
  if (f.environment && *f.environment != cfg.environment) {
    // Switching environment resets the grid and baseline schedule.
    teql::RunConfig fresh = teql::default_config(*f.environment);
    fresh.experiment = cfg.experiment;
    fresh.episodes = cfg.episodes;
    fresh.seeds = cfg.seeds;
    fresh.output_dir = cfg.output_dir;
    cfg = fresh;
  }
  if (f.output) cfg.output_dir = *f.output;
  if (f.seeds) cfg.seeds = *f.seeds;
  if (f.episodes) cfg.episodes = *f.episodes;
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-factored Q-learning experiments"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string variant = "teql";
  int seed_index = 0;
  auto* train = app.add_subcommand("train", "Train one variant for one seed");
  add_common(train, train_flags);
  train->add_option("--variant", variant, "Variant id (e.g. teql, tlr)");
  train->add_option("--seed-index", seed_index, "Seed index")->check(CLI::NonNegativeNumber);

  CommonFlags exp_flags;
  std::optional<std::string> experiment;
  bool dry_run = false;
  bool serial = false;
  auto* exp = app.add_subcommand("experiment", "Run a full variant x seed study");
  add_common(exp, exp_flags);
  exp->add_option("--experiment", experiment,
                  "teql_vs_tlr, ablation_penalty, granularity_sweep or regret");
  exp->add_flag("--dry-run", dry_run, "Write the manifest only");
  exp->add_flag("--serial", serial, "Run cells serially");

  CommonFlags regret_flags;
  auto* regret = app.add_subcommand("regret", "Regret study on the synthetic MDP");
  add_common(regret, regret_flags);

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "Re-aggregate rewards CSVs in a directory");
  rep->add_option("dir", report_dir, "Results directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const teql::RunConfig cfg = resolve(train_flags);
      const auto run = teql::train_cell(cfg, variant, seed_index);
      if (run.diverged) {
        std::cerr << "diverged: " << run.diagnostic << '\n';
        return 2;
      }
      const double tail = run.smoothed.empty() ? 0.0 : run.smoothed.back();
      std::cout << fmt::format("{} seed {}: {} episodes, {} steps, final smoothed reward {:.3f}\n",
                               variant, seed_index, run.rewards.size(), run.steps, tail);
    } else if (*exp || *regret) {
      teql::RunConfig cfg = resolve(*exp ? exp_flags : regret_flags);
      if (*regret) cfg.experiment = teql::ExperimentKind::regret;
      if (experiment) cfg.experiment = teql::experiment_kind_from_string(*experiment);
      const auto outcome = teql::run_experiment(cfg, {dry_run, serial});
      std::cout << fmt::format("{}: {} cells, {} steps, {} diverged -> {}\n",
                               teql::to_string(cfg.experiment), outcome.cells, outcome.steps,
                               outcome.diverged, outcome.output_dir.string());
      return outcome.diverged > 0 ? 2 : 0;
    } else if (*rep) {
      const int n = teql::report(report_dir);
      std::cout << fmt::format("aggregated {} variants in {}\n", n, report_dir);
    }
  } catch (const teql::PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
