#include "teql/policy.hpp"

#include <cmath>

#include "teql/error.hpp"

namespace teql {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::euge: return "euge";
    case PolicyKind::ucb: return "ucb";
    case PolicyKind::epsilon_greedy: return "epsilon_greedy";
    case PolicyKind::greedy: return "greedy";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "euge") return PolicyKind::euge;
  if (name == "ucb") return PolicyKind::ucb;
  if (name == "epsilon_greedy") return PolicyKind::epsilon_greedy;
  if (name == "greedy") return PolicyKind::greedy;
  throw PreconditionError("unknown policy kind '" + name + "'");
}

void PolicyConfig::validate() const {
  if ((kind == PolicyKind::euge || kind == PolicyKind::ucb) && !(exploration_c > 0.0))
    throw PreconditionError("PolicyConfig: c must be > 0 for euge/ucb");
  if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0))
    throw PreconditionError("PolicyConfig: epsilon0 must be in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
    throw PreconditionError("PolicyConfig: epsilon decay must be in (0, 1]");
}

double PolicyConfig::epsilon_at(int episode) const {
  return epsilon0 * std::pow(epsilon_decay, episode);
}

double ucb_bonus(std::uint64_t state_total, std::uint64_t visits) {
  if (state_total <= 1) return 0.0;
  return std::sqrt(std::log(static_cast<double>(state_total)) /
                   (static_cast<double>(visits) + 1.0));
}

namespace {

std::vector<int> zero_based_state(const CpModel& model, const IndexTuple& state) {
  model.check_state_index(state);
  std::vector<int> s0(state.indices);
  for (int& i : s0) --i;
  return s0;
}

std::vector<double> bonus_values(const CpModel& model, const StatTables& tables,
                                 const IndexTuple& state, double c, bool with_error) {
  const auto s0 = zero_based_state(model, state);
  std::vector<double> values(model.action_grid_size());
  model.action_values(s0, values);
  const std::uint64_t skey = tables.state_key(s0);
  const std::uint64_t total = tables.state_total_at(skey);
  for (std::size_t a = 0; a < values.size(); ++a) {
    const std::uint64_t key = tables.pair_key(skey, a);
    const double err = with_error ? tables.q_error_at(key) : 0.0;
    values[a] += c * (err + ucb_bonus(total, tables.visits_at(key)));
  }
  return values;
}

}  // namespace

std::vector<double> euge_values(const CpModel& model, const StatTables& tables,
                                const IndexTuple& state, double c) {
  return bonus_values(model, tables, state, c, true);
}

std::vector<double> ucb_values(const CpModel& model, const StatTables& tables,
                               const IndexTuple& state, double c) {
  return bonus_values(model, tables, state, c, false);
}

std::size_t argmax_lowest(const std::vector<double>& values) {
  if (values.empty()) throw PreconditionError("argmax_lowest: empty input");
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return best;
}

IndexTuple action_tuple(const CpModel& model, std::size_t linear) {
  std::vector<int> a0(static_cast<std::size_t>(model.n_action_dims()));
  model.decode_action(linear, a0);
  for (int& i : a0) ++i;
  return IndexTuple(std::move(a0));
}

IndexTuple euge_select(const CpModel& model, const StatTables& tables, const IndexTuple& state,
                       const PolicyConfig& cfg) {
  return action_tuple(model, argmax_lowest(euge_values(model, tables, state, cfg.exploration_c)));
}

IndexTuple ucb_select(const CpModel& model, const StatTables& tables, const IndexTuple& state,
                      const PolicyConfig& cfg) {
  return action_tuple(model, argmax_lowest(ucb_values(model, tables, state, cfg.exploration_c)));
}

IndexTuple greedy_select(const CpModel& model, const IndexTuple& state) {
  const auto s0 = zero_based_state(model, state);
  std::vector<double> values(model.action_grid_size());
  model.action_values(s0, values);
  return action_tuple(model, argmax_lowest(values));
}

IndexTuple epsilon_greedy_select(const CpModel& model, const IndexTuple& state, double epsilon,
                                 Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw PreconditionError("epsilon_greedy_select: epsilon must be in [0, 1]");
  // A draw is consumed on every call so the stream does not depend on epsilon.
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (u01(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, model.action_grid_size() - 1);
    return action_tuple(model, pick(rng));
  }
  return greedy_select(model, state);
}

IndexTuple select_action(const CpModel& model, const StatTables& tables,
                         const IndexTuple& state, const PolicyConfig& cfg, int episode,
                         Rng& rng) {
  switch (cfg.kind) {
    case PolicyKind::euge: return euge_select(model, tables, state, cfg);
    case PolicyKind::ucb: return ucb_select(model, tables, state, cfg);
    case PolicyKind::epsilon_greedy:
      return epsilon_greedy_select(model, state, cfg.epsilon_at(episode), rng);
    case PolicyKind::greedy: return greedy_select(model, state);
  }
  throw PreconditionError("select_action: unknown policy kind");
}

}  // namespace teql
