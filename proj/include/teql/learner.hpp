#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "teql/cp_model.hpp"
#include "teql/stat_tables.hpp"

namespace teql {

struct LearnerConfig {
  double penalty_weight = 0.0;   // lambda; weight of the frequency penalty
  double penalty_epsilon = 1.0;  // stabilizer in 1 / (N + epsilon)
  double alpha0 = 0.005;         // base learning rate
  double lr_decay = 1e-5;        // kappa in alpha_t = alpha0 / (1 + kappa t)
  double gamma = 0.9;
  double tolerance = 0.01;       // inner-loop break threshold on |dQ|
  int max_inner_iterations = 5;
  std::optional<double> q_clip;  // |Q| bound enforced after each update
  /// Caps alpha * ||P||^2 for one row step (P: product of the other modes'
  /// rows). Beyond 2 a plain gradient step overshoots the entry's target.
  /// nullopt applies the raw alpha_t.
  std::optional<double> max_step_gain = 0.1;

  void validate() const;
  double learning_rate(std::uint64_t t) const { return alpha0 / (1.0 + lr_decay * static_cast<double>(t)); }
  bool operator==(const LearnerConfig&) const = default;
};

/// One observed step. `state_action` is the full 1-based tuple for (s_t, a_t),
/// `next_state` the 1-based state tuple of s_{t+1}. `terminal` marks a true
/// failure/absorbing transition, whose bootstrap term is zero.
struct Transition {
  IndexTuple state_action;
  IndexTuple next_state;
  double reward = 0.0;
  bool terminal = false;
};

/// r + gamma * max_a' Q(s', a'), or r when the transition is terminal.
double compute_target(const CpModel& model, const Transition& transition, double gamma);

/// 0.5 (target - q)^2 - lambda q^2 / (N + epsilon) for a given Q-value.
double penalized_loss(double q, double target, double visit_count, const LearnerConfig& cfg);

/// Penalized loss at the model's current value of `idx`.
double loss(const CpModel& model, const IndexTuple& idx, double target, double visit_count,
            const LearnerConfig& cfg);

/// dL/dF_mode(i_mode, rank) for 0-based mode and rank:
/// -(target - q) P - 2 lambda q P / (N + epsilon), with P = prod_{m != mode} F_m(i_m, rank).
double grad_factor_entry(const CpModel& model, const IndexTuple& idx, double target,
                         double visit_count, const LearnerConfig& cfg, int mode, int rank);

struct UpdateReport {
  double target = 0.0;
  double q_before = 0.0;
  double q_after = 0.0;
  double q_error = 0.0;
  double learning_rate = 0.0;
  std::vector<int> inner_iterations;  // per mode
  bool clipped = false;
};

/// One low-rank tensor Q-function update for a transition at time step t >= 1.
///
/// The target is computed once from the pre-update model. Modes are visited
/// in order; each runs up to max_inner_iterations gradient steps on row
/// (i_n, .) only, all R entries stepped together from gradients evaluated at
/// the start of the iteration, and stops early once |Q_curr - Q_prev| < tau.
/// Afterwards the optional q_clip rescales the touched rows, Q_error is
/// recorded as |Q_before - Q_after|, and N(s,a), N_total(s) are incremented.
///
/// Throws DivergenceError if the updated Q-value is not finite.
UpdateReport bcd_update(CpModel& model, const Transition& transition, StatTables& tables,
                        const LearnerConfig& cfg, std::uint64_t t,
                        TouchCounter* counter = nullptr);

}  // namespace teql
