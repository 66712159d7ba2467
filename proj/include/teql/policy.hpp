#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "teql/cp_model.hpp"
#include "teql/environments.hpp"
#include "teql/stat_tables.hpp"

namespace teql {

enum class PolicyKind { euge, ucb, epsilon_greedy, greedy };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::euge;
  double exploration_c = 2.0;  // c
  double epsilon0 = 1.0;       // initial epsilon for epsilon_greedy
  double epsilon_decay = 0.99; // multiplicative, per episode

  void validate() const;
  /// epsilon0 * decay^episode, episode counted from 0.
  double epsilon_at(int episode) const;
  bool operator==(const PolicyConfig&) const = default;
};

/// Visit bonus sqrt(ln N_total / (N + 1)); zero when N_total <= 1.
double ucb_bonus(std::uint64_t state_total, std::uint64_t visits);

/// EU(s, a) = Q(s, a) + c (Q_error(s, a) + ucb_bonus) for every grid action,
/// in linear action order. `state` is 1-based.
std::vector<double> euge_values(const CpModel& model, const StatTables& tables,
                                const IndexTuple& state, double c);

/// Same as euge_values without the Q_error term.
std::vector<double> ucb_values(const CpModel& model, const StatTables& tables,
                               const IndexTuple& state, double c);

/// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax_lowest(const std::vector<double>& values);

/// Returns the 1-based action tuple selected by EUGE.
IndexTuple euge_select(const CpModel& model, const StatTables& tables, const IndexTuple& state,
                       const PolicyConfig& cfg);

/// Returns the 1-based action tuple maximizing Q + c * ucb_bonus.
IndexTuple ucb_select(const CpModel& model, const StatTables& tables, const IndexTuple& state,
                      const PolicyConfig& cfg);

IndexTuple greedy_select(const CpModel& model, const IndexTuple& state);

/// Uniform random grid action with probability epsilon, otherwise greedy.
IndexTuple epsilon_greedy_select(const CpModel& model, const IndexTuple& state, double epsilon,
                                 Rng& rng);

/// Dispatches on cfg.kind. `episode` drives the epsilon schedule.
IndexTuple select_action(const CpModel& model, const StatTables& tables,
                         const IndexTuple& state, const PolicyConfig& cfg, int episode,
                         Rng& rng);

/// Converts a linear action index to its 1-based action tuple.
IndexTuple action_tuple(const CpModel& model, std::size_t linear);

}  // namespace teql
