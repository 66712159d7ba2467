#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "teql/cp_model.hpp"
#include "teql/environments.hpp"
#include "teql/learner.hpp"
#include "teql/policy.hpp"

namespace teql {

/// Largest tensor dense_reconstruct will materialize.
inline constexpr std::size_t kDenseCap = 100000;

/// Explicit sum of R outer products, row-major (last mode fastest). Serial
/// reference; throws PreconditionError when prod d_n > kDenseCap.
std::vector<double> dense_reconstruct(const CpModel& model);

/// OpenMP version of dense_reconstruct; identical output.
std::vector<double> dense_reconstruct_parallel(const CpModel& model);

/// Central difference (f(x + h) - f(x - h)) / (2h).
double finite_diff_grad(const std::function<double(double)>& f, double x, double h);

/// Per-step regret V*(s_t) - Q*(s_t, a_t) and its running sum.
struct RegretTrace {
  std::vector<double> instantaneous;
  std::vector<double> cumulative;

  void push(double regret);
  /// Mean instantaneous regret over steps [begin, end) (0-based).
  double mean(std::size_t begin, std::size_t end) const;
  /// Non-overlapping window means.
  std::vector<double> window_average(std::size_t window) const;
  /// CSV with header step,instantaneous_regret,cumulative_regret (1-based steps).
  void write_csv(std::ostream& out) const;
};

/// Chooses a 0-based action for a 0-based state at 1-based step t.
using RegretChooser = std::function<int(int state, std::uint64_t t, Rng& rng)>;

/// Continuing interaction with the MDP for `steps` steps, teleporting to a
/// uniform random state every `restart_interval` steps. `on_transition`
/// (optional) observes (s, a, r, s', t) before the teleport.
RegretTrace run_regret_with(
    const SyntheticMdp& mdp, std::span<const double> q_star, std::uint64_t steps,
    std::uint64_t seed, int restart_interval, const RegretChooser& choose,
    const std::function<void(int, int, double, int, std::uint64_t)>& on_transition = {});

struct RegretSettings {
  LearnerConfig learner;
  PolicyConfig policy;
  int rank = 10;
  double init_scale = 1.0;
  std::uint64_t steps = 20000;
  int restart_interval = 200;
};

/// TEQL (CP model + BCD update + configured policy) on the synthetic MDP.
/// States and actions are already discrete: the tensor is S x A.
RegretTrace run_regret_experiment(const SyntheticMdp& mdp, std::span<const double> q_star,
                                  const RegretSettings& settings, std::uint64_t seed);

/// Least-squares slope of y against x = 0, 1, 2, ...
double fit_slope(std::span<const double> y);

}  // namespace teql
