#include "teql/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "teql/config.hpp"
#include "teql/environments.hpp"
#include "teql/error.hpp"
#include "teql/stat_tables.hpp"

namespace teql {

namespace {

constexpr const char* kVersion = "teql 0.1.0";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

IndexTuple concat(const IndexTuple& state, const IndexTuple& action) {
  std::vector<int> idx(state.indices);
  idx.insert(idx.end(), action.indices.begin(), action.indices.end());
  return IndexTuple(std::move(idx));
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::teql_vs_tlr: return "teql_vs_tlr";
    case ExperimentKind::ablation_penalty: return "ablation_penalty";
    case ExperimentKind::granularity_sweep: return "granularity_sweep";
    case ExperimentKind::regret: return "regret";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "teql_vs_tlr") return ExperimentKind::teql_vs_tlr;
  if (name == "ablation_penalty") return ExperimentKind::ablation_penalty;
  if (name == "granularity_sweep") return ExperimentKind::granularity_sweep;
  if (name == "regret") return ExperimentKind::regret;
  throw PreconditionError("unknown experiment kind '" + name + "'");
}

std::string to_string(ThresholdReference ref) {
  switch (ref) {
    case ThresholdReference::self: return "self";
    case ThresholdReference::shared: return "shared";
    case ThresholdReference::automatic: return "auto";
  }
  return "unknown";
}

ThresholdReference threshold_reference_from_string(const std::string& name) {
  if (name == "self") return ThresholdReference::self;
  if (name == "shared") return ThresholdReference::shared;
  if (name == "auto") return ThresholdReference::automatic;
  throw PreconditionError("unknown threshold reference '" + name + "'");
}

void RunConfig::validate() const {
  if (environment != "cartpole" && environment != "pendulum")
    throw PreconditionError("RunConfig: unknown environment '" + environment + "'");
  discretization.validate();
  const std::size_t expected_state = environment == "cartpole" ? 4 : 2;
  if (discretization.state.size() != expected_state || discretization.action.size() != 1)
    throw PreconditionError("RunConfig: discretization does not match the environment");
  learner.validate();
  policy.validate();
  baseline_policy.validate();
  if (episodes < 1) throw PreconditionError("RunConfig: episodes must be >= 1");
  if (max_steps < 1) throw PreconditionError("RunConfig: max_steps must be >= 1");
  if (seeds < 1) throw PreconditionError("RunConfig: seeds must be >= 1");
  if (rank < 1) throw PreconditionError("RunConfig: rank must be >= 1");
  if (!(init_scale >= 0.0)) throw PreconditionError("RunConfig: init_scale must be >= 0");
  if (mdp_states < 1 || mdp_actions < 1) throw PreconditionError("RunConfig: empty synthetic MDP");
  if (regret_steps < 2) throw PreconditionError("RunConfig: regret steps must be >= 2");
  if (restart_interval < 1) throw PreconditionError("RunConfig: restart interval must be >= 1");
  if (analysis.smoothing_window < 1) throw PreconditionError("RunConfig: smoothing window must be >= 1");
  if (!(analysis.tail_fraction > 0.0 && analysis.tail_fraction <= 1.0))
    throw PreconditionError("RunConfig: tail fraction must be in (0, 1]");
  for (double f : analysis.fractions)
    if (!(f > 0.0 && f <= 1.0)) throw PreconditionError("RunConfig: threshold fractions must be in (0, 1]");
}

RunConfig default_config(const std::string& environment) {
  RunConfig cfg;
  cfg.environment = environment;
  cfg.policy = {PolicyKind::euge, 2.0, 0.0, 0.99};
  if (environment == "cartpole") {
    cfg.discretization = presets::cartpole();
    cfg.baseline_policy = {PolicyKind::epsilon_greedy, 2.0, 0.0, 0.99};
  } else if (environment == "pendulum") {
    cfg.discretization = presets::pendulum();
    cfg.baseline_policy = {PolicyKind::epsilon_greedy, 2.0, 1.0, 0.99};
  } else {
    throw PreconditionError("default_config: unknown environment '" + environment + "'");
  }
  return cfg;
}

double reward_bound(const RunConfig& cfg) {
  return cfg.environment == "pendulum" ? pendulum::max_step_cost() : 1.0;
}

LearnerConfig effective_learner(const RunConfig& cfg) {
  LearnerConfig lc = cfg.learner;
  if (cfg.auto_penalty) {
    const double d_eff = static_cast<double>(cfg.rank) *
                         static_cast<double>(cfg.discretization.tensor_dims().size());
    const double horizon = static_cast<double>(cfg.episodes) * cfg.max_steps;
    lc.penalty_weight = std::sqrt(d_eff / horizon);
  }
  if (cfg.auto_q_clip) lc.q_clip = 2.0 * reward_bound(cfg) / (1.0 - lc.gamma);
  return lc;
}

std::vector<double> trailing_mean(std::span<const double> series, int window) {
  if (window < 1) throw PreconditionError("trailing_mean: window must be >= 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t k = 0; k < series.size(); ++k) {
    sum += series[k];
    if (k >= w) sum -= series[k - w];
    out[k] = sum / static_cast<double>(std::min(k + 1, w));
  }
  return out;
}

double asymptotic_level(std::span<const double> series, const ThresholdOptions& opt) {
  if (series.empty()) throw PreconditionError("asymptotic_level: empty series");
  const auto smoothed = trailing_mean(series, opt.window);
  const auto n = smoothed.size();
  const auto tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(opt.tail_fraction * static_cast<double>(n))));
  double sum = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) sum += smoothed[k];
  return sum / static_cast<double>(tail);
}

std::optional<int> episodes_to_threshold(std::span<const double> series, double fraction,
                                         const ThresholdOptions& opt) {
  if (series.empty()) throw PreconditionError("episodes_to_threshold: empty series");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw PreconditionError("episodes_to_threshold: fraction must be in (0, 1]");
  const double level = opt.reference ? *opt.reference : asymptotic_level(series, opt);
  const double target = opt.floor + fraction * (level - opt.floor);
  const auto smoothed = trailing_mean(series, opt.window);
  const std::size_t first =
      std::min(static_cast<std::size_t>(opt.window), smoothed.size()) - 1;
  for (std::size_t k = first; k < smoothed.size(); ++k)
    if (smoothed[k] >= target) return static_cast<int>(k + 1);
  return std::nullopt;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw PreconditionError("percentile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("percentile: p must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PercentileBands aggregate_seeds(const std::vector<std::vector<double>>& series) {
  if (series.size() < 2) throw PreconditionError("aggregate_seeds: need at least two seeds");
  const std::size_t len = series.front().size();
  for (const auto& s : series)
    if (s.size() != len) throw PreconditionError("aggregate_seeds: mismatched series lengths");
  PercentileBands bands;
  bands.p25.resize(len);
  bands.p50.resize(len);
  bands.p75.resize(len);
  std::vector<double> column(series.size());
  for (std::size_t e = 0; e < len; ++e) {
    for (std::size_t k = 0; k < series.size(); ++k) column[k] = series[k][e];
    bands.p25[e] = percentile(column, 0.25);
    bands.p50[e] = percentile(column, 0.50);
    bands.p75[e] = percentile(column, 0.75);
  }
  return bands;
}

double median_episodes(const std::vector<std::optional<int>>& episodes) {
  if (episodes.empty()) throw PreconditionError("median_episodes: empty input");
  std::vector<double> values;
  values.reserve(episodes.size());
  for (const auto& e : episodes)
    values.push_back(e ? static_cast<double>(*e) : std::numeric_limits<double>::infinity());
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double a = values[n / 2 - 1];
  const double b = values[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::numeric_limits<double>::infinity();
  return 0.5 * (a + b);
}

double random_policy_return(const RunConfig& cfg, int episodes) {
  if (episodes < 1) throw PreconditionError("random_policy_return: episodes must be >= 1");
  const auto& disc = cfg.discretization;
  auto env = make_environment(cfg.environment, cfg.max_steps);
  Rng rng(0x5eedULL);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    env->reset(rng);
    while (!env->done()) {
      std::vector<int> action;
      for (const auto& d : disc.action) action.push_back(std::uniform_int_distribution<int>(1, d.bins)(rng));
      total += env->step(action_vector(IndexTuple(action), disc)).reward;
    }
  }
  return total / episodes;
}

ThresholdOptions threshold_options(const RunConfig& cfg) {
  ThresholdOptions opt;
  opt.window = cfg.analysis.smoothing_window;
  opt.tail_fraction = cfg.analysis.tail_fraction;
  opt.floor = random_policy_return(cfg);
  return opt;
}

RunResult run_training(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const LearnerConfig learner = effective_learner(cfg);
  const auto& disc = cfg.discretization;
  const std::vector<int> dims = disc.tensor_dims();
  const int n_state = static_cast<int>(disc.n_state_dims());

  auto env = make_environment(cfg.environment, cfg.max_steps);
  CpModel model = init_model(dims, cfg.rank, n_state, splitmix64(seed ^ 0x1ULL), cfg.init_scale);
  StatTables tables(dims, n_state);
  Rng env_rng(splitmix64(seed ^ 0x2ULL));
  Rng policy_rng(splitmix64(seed ^ 0x3ULL));

  RunResult result;
  result.seed = seed;
  result.rewards.reserve(static_cast<std::size_t>(cfg.episodes));
  std::uint64_t t = 0;
  try {
    for (int episode = 0; episode < cfg.episodes; ++episode) {
      IndexTuple state = discretize_state(env->reset(env_rng), disc);
      double total = 0.0;
      while (!env->done()) {
        const IndexTuple action =
            select_action(model, tables, state, cfg.policy, episode, policy_rng);
        const EnvStep step = env->step(action_vector(action, disc));
        IndexTuple next = discretize_state(step.next_state, disc);
        const Transition tr{concat(state, action), next, step.reward, step.terminated};
        bcd_update(model, tr, tables, learner, ++t);
        total += step.reward;
        state = std::move(next);
      }
      result.rewards.push_back(total);
    }
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.diagnostic = fmt::format("{} at step {} entry ({})", e.what(), t, fmt::join(e.entry(), ","));
  }

  result.steps = t;
  result.visited_pairs = tables.visited_pairs();
  result.visited_states = tables.visited_states();
  result.error_entries = tables.error_entries();
  result.totals_consistent = tables.totals_consistent();
  result.smoothed = trailing_mean(result.rewards, cfg.analysis.smoothing_window);
  if (!result.diverged) {
    const ThresholdOptions opt = threshold_options(cfg);
    for (std::size_t k = 0; k < 3; ++k)
      result.thresholds[k] = episodes_to_threshold(result.rewards, cfg.analysis.fractions[k], opt);
  }
  return result;
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& variant_id, int seed_index) {
  return splitmix64(splitmix64(master ^ fnv1a(variant_id)) + static_cast<std::uint64_t>(seed_index));
}

std::vector<Variant> make_variants(const RunConfig& cfg) {
  cfg.validate();
  RunConfig teql = cfg;
  teql.learner = effective_learner(cfg);
  teql.auto_penalty = false;
  teql.auto_q_clip = false;

  auto tlr_of = [](RunConfig base) {
    base.learner.penalty_weight = 0.0;
    base.policy = base.baseline_policy;
    return base;
  };

  std::vector<Variant> out;
  switch (cfg.experiment) {
    case ExperimentKind::teql_vs_tlr:
      out.push_back({"teql", teql});
      out.push_back({"tlr", tlr_of(teql)});
      break;
    case ExperimentKind::ablation_penalty: {
      RunConfig no_penalty = teql;
      no_penalty.learner.penalty_weight = 0.0;
      out.push_back({"teql", teql});
      out.push_back({"teql_no_penalty", no_penalty});
      break;
    }
    case ExperimentKind::granularity_sweep: {
      const auto grids = cfg.environment == "cartpole" ? presets::cartpole_granularities()
                                                       : presets::pendulum_granularities();
      for (const auto& g : grids) {
        RunConfig at = cfg;
        at.discretization = g.spec;
        RunConfig resolved = at;
        resolved.learner = effective_learner(at);
        resolved.auto_penalty = false;
        resolved.auto_q_clip = false;
        out.push_back({"teql_" + g.name, resolved});
        out.push_back({"tlr_" + g.name, tlr_of(resolved)});
      }
      break;
    }
    case ExperimentKind::regret:
      out.push_back({"teql", teql});
      break;
  }
  return out;
}

std::vector<RunResult> run_cells_serial(const std::vector<Cell>& cells) {
  std::vector<RunResult> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(run_training(*c.config, c.seed));
  return out;
}

std::vector<RunResult> run_cells(const std::vector<Cell>& cells, int workers) {
  std::vector<RunResult> out(cells.size());
  const auto n = static_cast<long long>(cells.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  // Each cell owns its model, tables and RNGs; results land in fixed slots.
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    out[i] = run_training(*cells[i].config, cells[i].seed);
  }
  return out;
}

const VariantSummary& ExperimentSummary::variant(const std::string& id) const {
  for (const auto& v : variants)
    if (v.id == id) return v;
  throw PreconditionError("no variant '" + id + "' in experiment summary");
}

void summarize(ExperimentSummary& summary) {
  summary.any_diverged = false;
  for (auto& v : summary.variants) {
    const ThresholdOptions opt = threshold_options(v.config);
    std::vector<std::vector<double>> smoothed;
    std::vector<double> asymptotes;
    v.diverged = 0;
    for (const auto& run : v.runs) {
      if (run.diverged) {
        ++v.diverged;
        continue;
      }
      smoothed.push_back(trailing_mean(run.rewards, opt.window));
      asymptotes.push_back(asymptotic_level(run.rewards, opt));
    }
    summary.any_diverged = summary.any_diverged || v.diverged > 0;
    v.bands = smoothed.size() >= 2 ? aggregate_seeds(smoothed) : PercentileBands{};
    if (smoothed.size() == 1) v.bands = {smoothed[0], smoothed[0], smoothed[0]};
    v.median_asymptote = asymptotes.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : percentile(asymptotes, 0.5);
  }

  const auto ref_mode = summary.config.analysis.reference;
  const bool shared =
      ref_mode == ThresholdReference::shared ||
      (ref_mode == ThresholdReference::automatic &&
       summary.config.experiment == ExperimentKind::granularity_sweep);
  summary.shared_reference.reset();
  if (shared) {
    for (const auto& v : summary.variants) {
      if (std::isnan(v.median_asymptote)) continue;
      if (!summary.shared_reference || v.median_asymptote > *summary.shared_reference)
        summary.shared_reference = v.median_asymptote;
    }
  }

  for (auto& v : summary.variants) {
    ThresholdOptions opt = threshold_options(v.config);
    opt.reference = summary.shared_reference;
    const auto& fractions = summary.config.analysis.fractions;
    v.thresholds.clear();
    std::array<std::vector<std::optional<int>>, 3> columns;
    for (const auto& run : v.runs) {
      if (run.diverged) continue;
      std::array<std::optional<int>, 3> row{};
      for (std::size_t k = 0; k < 3; ++k) {
        row[k] = episodes_to_threshold(run.rewards, fractions[k], opt);
        columns[k].push_back(row[k]);
      }
      v.thresholds.push_back(row);
    }
    for (std::size_t k = 0; k < 3; ++k)
      v.median_thresholds[k] = columns[k].empty() ? std::numeric_limits<double>::infinity()
                                                  : median_episodes(columns[k]);
  }
}

ExperimentSummary run_variants(const RunConfig& cfg, bool serial) {
  ExperimentSummary summary;
  summary.config = cfg;
  const auto variants = make_variants(cfg);
  std::vector<Cell> cells;
  for (const auto& v : variants)
    for (int s = 0; s < cfg.seeds; ++s) cells.push_back({&v.config, derive_seed(cfg.master_seed, v.id, s)});
  const auto runs = serial ? run_cells_serial(cells) : run_cells(cells, cfg.workers);
  std::size_t k = 0;
  for (const auto& v : variants) {
    VariantSummary vs;
    vs.id = v.id;
    vs.config = v.config;
    for (int s = 0; s < cfg.seeds; ++s) vs.runs.push_back(runs[k++]);
    summary.variants.push_back(std::move(vs));
  }
  summarize(summary);
  return summary;
}

RegretStudy run_regret_study(const RunConfig& cfg) {
  cfg.validate();
  const SyntheticMdp mdp =
      generate_synthetic_mdp(cfg.mdp_states, cfg.mdp_actions, cfg.learner.gamma, cfg.mdp_seed);
  const std::vector<double> q_star = synthetic_q_star(mdp);

  RegretSettings settings;
  settings.learner = cfg.learner;
  if (cfg.auto_penalty) {
    const double d_eff = static_cast<double>(cfg.rank) * 2.0;
    settings.learner.penalty_weight = std::sqrt(d_eff / static_cast<double>(cfg.regret_steps));
  }
  if (cfg.auto_q_clip)
    settings.learner.q_clip = 2.0 * std::max(mdp.reward_bound(), 1e-12) / (1.0 - cfg.learner.gamma);
  settings.policy = cfg.policy;
  settings.rank = cfg.rank;
  settings.init_scale = cfg.init_scale;
  settings.steps = cfg.regret_steps;
  settings.restart_interval = cfg.restart_interval;

  RegretStudy study;
  study.q_star_residual = bellman_residual(mdp, q_star);
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < cfg.seeds; ++s) seeds.push_back(derive_seed(cfg.master_seed, "regret", s));
  study.traces.resize(seeds.size());
  const auto n = static_cast<long long>(seeds.size());
  const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long k = 0; k < n; ++k)
    study.traces[static_cast<std::size_t>(k)] =
        run_regret_experiment(mdp, q_star, settings, seeds[static_cast<std::size_t>(k)]);

  const auto half = static_cast<std::size_t>(cfg.regret_steps / 2);
  for (const auto& trace : study.traces) {
    study.first_half_mean.push_back(trace.mean(0, half));
    study.second_half_mean.push_back(trace.mean(half, trace.instantaneous.size()));
  }
  return study;
}

void write_rewards_csv(const std::filesystem::path& path, const RunResult& run) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "episode,total_reward,smoothed_reward\n";
  for (std::size_t e = 0; e < run.rewards.size(); ++e)
    out << fmt::format("{},{},{}\n", e + 1, run.rewards[e], run.smoothed[e]);
}

void write_aggregate_csv(const std::filesystem::path& path, const PercentileBands& bands) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "episode,p25,p50,p75\n";
  for (std::size_t e = 0; e < bands.p50.size(); ++e)
    out << fmt::format("{},{},{},{}\n", e + 1, bands.p25[e], bands.p50[e], bands.p75[e]);
}

void write_thresholds_csv(const std::filesystem::path& path, const VariantSummary& summary) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "seed,frac80,frac90,frac95\n";
  auto cell = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("NA"); };
  std::size_t row = 0;
  for (std::size_t s = 0; s < summary.runs.size(); ++s) {
    if (summary.runs[s].diverged) continue;
    const auto& t = summary.thresholds[row++];
    out << fmt::format("{},{},{},{}\n", s, cell(t[0]), cell(t[1]), cell(t[2]));
  }
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json physics_record() {
  return {{"pendulum",
           {{"dt", pendulum::kDt},
            {"g", pendulum::kGravity},
            {"m", pendulum::kMass},
            {"l", pendulum::kLength},
            {"max_speed", pendulum::kMaxSpeed},
            {"max_torque", pendulum::kMaxTorque}}},
          {"cartpole",
           {{"gravity", cartpole::kGravity},
            {"cart_mass", cartpole::kCartMass},
            {"pole_mass", cartpole::kPoleMass},
            {"half_length", cartpole::kHalfLength},
            {"force_scale", cartpole::kForceScale},
            {"dt", cartpole::kDt},
            {"x_threshold", cartpole::kXThreshold},
            {"theta_threshold", cartpole::kThetaThreshold}}}};
}

nlohmann::json analysis_record(const RunConfig& cfg) {
  return {{"smoothing", fmt::format("trailing mean over {} episodes", cfg.analysis.smoothing_window)},
          {"smoothing_window", cfg.analysis.smoothing_window},
          {"asymptote", fmt::format("mean smoothed reward over final {} of episodes",
                                    cfg.analysis.tail_fraction)},
          {"tail_fraction", cfg.analysis.tail_fraction},
          {"fractions", cfg.analysis.fractions},
          {"threshold_rule", "first full-window episode with smoothed >= floor + f (level - floor)"},
          {"threshold_floor", "mean return of a uniform-random policy (200 fixed-seed episodes)"},
          {"threshold_reference", to_string(cfg.analysis.reference)},
          {"percentile_method", "linear interpolation between order statistics"}};
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace

ExperimentOutcome run_experiment(const RunConfig& cfg, const ExperimentOptions& options) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  ExperimentOutcome outcome;
  outcome.output_dir = cfg.output_dir;
  std::filesystem::create_directories(outcome.output_dir);

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["started_at"] = utc_timestamp();
  manifest["dry_run"] = options.dry_run;
  manifest["config"] = config_to_json(cfg);
  manifest["physics"] = physics_record();
  manifest["analysis"] = analysis_record(cfg);
  manifest["divergences"] = nlohmann::json::array();

  const auto variants = make_variants(cfg);
  nlohmann::json variant_records = nlohmann::json::array();
  for (const auto& v : variants) {
    nlohmann::json seeds = nlohmann::json::array();
    for (int s = 0; s < cfg.seeds; ++s) seeds.push_back(derive_seed(cfg.master_seed, v.id, s));
    variant_records.push_back({{"id", v.id},
                               {"config", config_to_json(v.config)},
                               {"seeds", seeds},
                               {"threshold_floor", threshold_options(v.config).floor}});
  }
  manifest["variants"] = variant_records;
  outcome.cells = static_cast<int>(variants.size()) * cfg.seeds;

  if (!options.dry_run && cfg.experiment == ExperimentKind::regret) {
    const RegretStudy study = run_regret_study(cfg);
    nlohmann::json per_seed = nlohmann::json::array();
    for (std::size_t s = 0; s < study.traces.size(); ++s) {
      std::ofstream out(outcome.output_dir / fmt::format("regret_teql_{}.csv", s));
      study.traces[s].write_csv(out);
      per_seed.push_back({{"seed_index", s},
                          {"first_half_mean", study.first_half_mean[s]},
                          {"second_half_mean", study.second_half_mean[s]},
                          {"cumulative", study.traces[s].cumulative.back()}});
      outcome.steps += study.traces[s].instantaneous.size();
    }
    manifest["regret"] = {{"q_star_bellman_residual", study.q_star_residual}, {"per_seed", per_seed}};
  } else if (!options.dry_run) {
    const ExperimentSummary summary = run_variants(cfg, options.serial);
    nlohmann::json medians = nlohmann::json::object();
    for (const auto& v : summary.variants) {
      for (std::size_t s = 0; s < v.runs.size(); ++s) {
        const auto& run = v.runs[s];
        outcome.steps += run.steps;
        write_rewards_csv(outcome.output_dir / fmt::format("rewards_{}_{}.csv", v.id, s), run);
        if (run.diverged) {
          ++outcome.diverged;
          manifest["divergences"].push_back(
              {{"variant", v.id}, {"seed_index", s}, {"diagnostic", run.diagnostic}});
        }
      }
      if (!v.bands.p50.empty())
        write_aggregate_csv(outcome.output_dir / fmt::format("aggregate_{}.csv", v.id), v.bands);
      write_thresholds_csv(outcome.output_dir / fmt::format("thresholds_{}.csv", v.id), v);
      auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
      medians[v.id] = {{"median_asymptote", num(v.median_asymptote)},
                       {"median_frac80", num(v.median_thresholds[0])},
                       {"median_frac90", num(v.median_thresholds[1])},
                       {"median_frac95", num(v.median_thresholds[2])},
                       {"diverged", v.diverged}};
    }
    manifest["summary"] = medians;
    manifest["shared_reference"] =
        summary.shared_reference ? nlohmann::json(*summary.shared_reference) : nlohmann::json(nullptr);
  }

  manifest["total_steps"] = outcome.steps;
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_manifest(outcome.output_dir, manifest);
  return outcome;
}

RunResult train_cell(const RunConfig& cfg, const std::string& variant_id, int seed_index) {
  const auto variants = make_variants(cfg);
  auto it = std::find_if(variants.begin(), variants.end(),
                         [&](const Variant& v) { return v.id == variant_id; });
  if (it == variants.end()) throw PreconditionError("unknown variant '" + variant_id + "'");
  if (seed_index < 0) throw PreconditionError("seed index must be >= 0");
  RunResult run = run_training(it->config, derive_seed(cfg.master_seed, variant_id, seed_index));
  std::filesystem::create_directories(cfg.output_dir);
  write_rewards_csv(std::filesystem::path(cfg.output_dir) /
                        fmt::format("rewards_{}_{}.csv", variant_id, seed_index),
                    run);
  return run;
}

int report(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw PreconditionError("report: not a directory: " + dir.string());
  RunConfig cfg;
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    nlohmann::json manifest;
    in >> manifest;
    cfg = config_from_json(manifest.at("config"));
  }

  const std::regex name_re(R"(rewards_(.+)_(\d+)\.csv)");
  std::map<std::string, std::map<int, RunResult>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, name_re)) continue;
    RunResult run;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string episode, reward;
      std::getline(ls, episode, ',');
      std::getline(ls, reward, ',');
      run.rewards.push_back(std::stod(reward));
    }
    run.smoothed = trailing_mean(run.rewards, cfg.analysis.smoothing_window);
    found[m[1].str()][std::stoi(m[2].str())] = std::move(run);
  }

  ExperimentSummary summary;
  summary.config = cfg;
  std::map<std::string, RunConfig> variant_configs;
  for (const auto& v : make_variants(cfg)) variant_configs[v.id] = v.config;
  for (auto& [id, runs] : found) {
    VariantSummary vs;
    vs.id = id;
    auto it = variant_configs.find(id);
    vs.config = it != variant_configs.end() ? it->second : cfg;
    for (auto& [seed_index, run] : runs) vs.runs.push_back(std::move(run));
    summary.variants.push_back(std::move(vs));
  }
  summarize(summary);
  for (const auto& v : summary.variants) {
    if (!v.bands.p50.empty()) write_aggregate_csv(dir / fmt::format("aggregate_{}.csv", v.id), v.bands);
    write_thresholds_csv(dir / fmt::format("thresholds_{}.csv", v.id), v);
  }
  return static_cast<int>(summary.variants.size());
}

}  // namespace teql
