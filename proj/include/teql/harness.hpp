#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teql/discretization.hpp"
#include "teql/learner.hpp"
#include "teql/oracle.hpp"
#include "teql/policy.hpp"

namespace teql {

enum class ExperimentKind { teql_vs_tlr, ablation_penalty, granularity_sweep, regret };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// How episodes_to_threshold picks its asymptotic level.
enum class ThresholdReference {
  self,    // each seed's own final-window mean
  shared,  // one level for the whole study (best median asymptote)
  automatic,  // shared for granularity sweeps, self otherwise
};

std::string to_string(ThresholdReference ref);
ThresholdReference threshold_reference_from_string(const std::string& name);

struct AnalysisConfig {
  int smoothing_window = 50;
  double tail_fraction = 0.1;  // asymptote = mean smoothed reward over this final share
  std::array<double, 3> fractions = {0.8, 0.9, 0.95};
  ThresholdReference reference = ThresholdReference::automatic;

  bool operator==(const AnalysisConfig&) const = default;
};

struct RunConfig {
  std::string environment = "cartpole";
  ExperimentKind experiment = ExperimentKind::teql_vs_tlr;
  DiscretizationSpec discretization = presets::cartpole();
  LearnerConfig learner;
  PolicyConfig policy;           // TEQL exploration
  PolicyConfig baseline_policy;  // TLR exploration
  bool auto_penalty = true;      // lambda = sqrt(d_eff / T), T = episodes * max_steps
  bool auto_q_clip = true;       // q_clip = 2 R_max / (1 - gamma)
  int episodes = 500;
  int max_steps = 100;
  int seeds = 10;
  int rank = 10;
  double init_scale = 1.5;
  std::uint64_t master_seed = 20240601;
  std::string output_dir = "results";
  int workers = 0;  // 0: OpenMP default

  // Synthetic-MDP regret study.
  int mdp_states = 5;
  int mdp_actions = 3;
  std::uint64_t mdp_seed = 7;
  std::uint64_t regret_steps = 20000;
  int restart_interval = 200;

  AnalysisConfig analysis;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Defaults for "cartpole" or "pendulum", including the environment's grid and
/// the TLR epsilon schedule (epsilon0 = 0 for CartPole, 1 for Pendulum).
RunConfig default_config(const std::string& environment);

/// R_max of the configured environment (per-step |r| bound).
double reward_bound(const RunConfig& cfg);

/// Learner config with auto lambda / q_clip resolved.
LearnerConfig effective_learner(const RunConfig& cfg);

/// Trailing mean over `window` episodes; the first window-1 entries average
/// the episodes seen so far.
std::vector<double> trailing_mean(std::span<const double> series, int window);

struct ThresholdOptions {
  int window = 50;
  double tail_fraction = 0.1;
  /// Zero point of the score; thresholds interpolate floor + f (level - floor).
  /// Zero reproduces the plain "fraction of the asymptote" rule.
  double floor = 0.0;
  /// Overrides the series' own asymptotic level when set.
  std::optional<double> reference;
};

/// Mean of the smoothed series over its final tail_fraction of episodes.
double asymptotic_level(std::span<const double> series, const ThresholdOptions& opt);

/// First 1-based episode, among those with a full smoothing window, whose
/// trailing mean reaches floor + fraction * (level - floor). nullopt if never.
std::optional<int> episodes_to_threshold(std::span<const double> series, double fraction,
                                         const ThresholdOptions& opt = {});

/// Linear interpolation between order statistics (position (n - 1) p).
double percentile(std::vector<double> values, double p);

struct PercentileBands {
  std::vector<double> p25;
  std::vector<double> p50;
  std::vector<double> p75;
};

/// Per-episode 25/50/75 percentiles across seeds. Needs >= 2 equal-length series.
PercentileBands aggregate_seeds(const std::vector<std::vector<double>>& series);

/// Median of threshold episodes with "never" ordered after every number
/// (returned as +infinity when it decides the median).
double median_episodes(const std::vector<std::optional<int>>& episodes);

/// Per-seed training outcome.
struct RunResult {
  std::uint64_t seed = 0;
  std::vector<double> rewards;   // total reward per episode
  std::vector<double> smoothed;  // trailing mean
  std::array<std::optional<int>, 3> thresholds{};  // self-referenced, per analysis.fractions
  bool diverged = false;
  std::string diagnostic;
  std::uint64_t steps = 0;
  std::size_t visited_pairs = 0;   // entries in the N(s,a) table
  std::size_t visited_states = 0;  // entries in the N_total(s) table
  std::size_t error_entries = 0;   // entries in the Q_error table
  bool totals_consistent = true;
};

/// Mean episode return of a uniform-random policy over cfg's action grid,
/// from a fixed-seed rollout. Used as the threshold floor.
double random_policy_return(const RunConfig& cfg, int episodes = 200);

/// Threshold options for the configured environment: window, tail, and
/// floor = random_policy_return(cfg).
ThresholdOptions threshold_options(const RunConfig& cfg);

/// Trains one seed: episodes x steps of select / step / bcd_update.
RunResult run_training(const RunConfig& cfg, std::uint64_t seed);

struct Variant {
  std::string id;
  RunConfig config;  // fully resolved: auto lambda / q_clip already applied
};

/// Variant grid for cfg.experiment. TLR differs from TEQL only in lambda = 0
/// and the epsilon-greedy baseline policy.
std::vector<Variant> make_variants(const RunConfig& cfg);

/// Per-cell seed: splitmix64 mix of (master, variant id, seed index).
std::uint64_t derive_seed(std::uint64_t master, const std::string& variant_id,
                          int seed_index);

struct Cell {
  const RunConfig* config = nullptr;
  std::uint64_t seed = 0;
};

/// Runs cells on an OpenMP worker pool; output order matches input order.
std::vector<RunResult> run_cells(const std::vector<Cell>& cells, int workers = 0);

/// Serial reference for run_cells.
std::vector<RunResult> run_cells_serial(const std::vector<Cell>& cells);

struct VariantSummary {
  std::string id;
  RunConfig config;
  std::vector<RunResult> runs;
  PercentileBands bands;  // over smoothed rewards of non-diverged seeds
  /// thresholds[seed][k] for analysis.fractions[k] under the study's reference.
  std::vector<std::array<std::optional<int>, 3>> thresholds;
  std::array<double, 3> median_thresholds{};
  double median_asymptote = 0.0;
  int diverged = 0;
};

struct ExperimentSummary {
  RunConfig config;
  std::vector<VariantSummary> variants;
  std::optional<double> shared_reference;
  bool any_diverged = false;

  const VariantSummary& variant(const std::string& id) const;
};

/// Runs every variant x seed cell in memory and aggregates.
ExperimentSummary run_variants(const RunConfig& cfg, bool serial = false);

/// Recomputes bands and thresholds from finished runs.
void summarize(ExperimentSummary& summary);

struct RegretStudy {
  std::vector<RegretTrace> traces;
  std::vector<double> first_half_mean;
  std::vector<double> second_half_mean;
  double q_star_residual = 0.0;
};

/// TEQL on the seeded synthetic MDP, one trace per seed.
RegretStudy run_regret_study(const RunConfig& cfg);

struct ExperimentOptions {
  bool dry_run = false;
  bool serial = false;
};

struct ExperimentOutcome {
  std::filesystem::path output_dir;
  int cells = 0;
  int diverged = 0;
  std::uint64_t steps = 0;
};

/// Runs the configured study and writes rewards_/aggregate_/thresholds_ CSVs
/// plus manifest.json into cfg.output_dir. A dry run writes only the manifest.
ExperimentOutcome run_experiment(const RunConfig& cfg, const ExperimentOptions& options = {});

/// Single cell: writes rewards_<variant>_<seed>.csv for `variant_id`.
RunResult train_cell(const RunConfig& cfg, const std::string& variant_id, int seed_index);

/// Re-aggregates rewards_*.csv in `dir` into aggregate_/thresholds_ CSVs.
/// Analysis settings come from dir/manifest.json when present. Returns the
/// number of variants written.
int report(const std::filesystem::path& dir);

/// Writers shared by experiment and report.
void write_rewards_csv(const std::filesystem::path& path, const RunResult& run);
void write_aggregate_csv(const std::filesystem::path& path, const PercentileBands& bands);
void write_thresholds_csv(const std::filesystem::path& path, const VariantSummary& summary);

}  // namespace teql
