#include "teql/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "teql/error.hpp"

namespace teql {

void LearnerConfig::validate() const {
  if (!(penalty_weight >= 0.0)) throw PreconditionError("LearnerConfig: lambda must be >= 0");
  if (!(penalty_epsilon > 0.0)) throw PreconditionError("LearnerConfig: penalty epsilon must be > 0");
  if (!(alpha0 > 0.0)) throw PreconditionError("LearnerConfig: alpha0 must be > 0");
  if (!(lr_decay >= 0.0)) throw PreconditionError("LearnerConfig: kappa must be >= 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("LearnerConfig: gamma must be in (0, 1)");
  if (!(tolerance >= 0.0)) throw PreconditionError("LearnerConfig: tau must be >= 0");
  if (max_inner_iterations < 1) throw PreconditionError("LearnerConfig: I_max must be >= 1");
  if (q_clip && !(*q_clip > 0.0)) throw PreconditionError("LearnerConfig: q_clip must be > 0");
  if (max_step_gain && !(*max_step_gain > 0.0))
    throw PreconditionError("LearnerConfig: max_step_gain must be > 0");
}

namespace {

std::vector<int> zero_based(const IndexTuple& idx) {
  std::vector<int> out(idx.indices);
  for (int& i : out) --i;
  return out;
}

double max_over_actions(const CpModel& model, std::span<const int> state0, TouchCounter* counter) {
  std::vector<double> q(model.action_grid_size());
  model.action_values(state0, q, counter);
  return *std::max_element(q.begin(), q.end());
}

double other_mode_product(const CpModel& model, std::span<const int> idx0, int mode, int rank) {
  double p = 1.0;
  for (int m = 0; m < model.order(); ++m) {
    if (m == mode) continue;
    p *= model.row(m, idx0[static_cast<std::size_t>(m)])[static_cast<std::size_t>(rank)];
  }
  return p;
}

}  // namespace

double compute_target(const CpModel& model, const Transition& transition, double gamma) {
  if (transition.terminal) return transition.reward;
  model.check_state_index(transition.next_state);
  const auto next0 = zero_based(transition.next_state);
  return transition.reward + gamma * max_over_actions(model, next0, nullptr);
}

double penalized_loss(double q, double target, double visit_count, const LearnerConfig& cfg) {
  const double residual = target - q;
  return 0.5 * residual * residual -
         cfg.penalty_weight * q * q / (visit_count + cfg.penalty_epsilon);
}

double loss(const CpModel& model, const IndexTuple& idx, double target, double visit_count,
            const LearnerConfig& cfg) {
  return penalized_loss(evaluate_q(model, idx), target, visit_count, cfg);
}

double grad_factor_entry(const CpModel& model, const IndexTuple& idx, double target,
                         double visit_count, const LearnerConfig& cfg, int mode, int rank) {
  model.check_index(idx);
  if (mode < 0 || mode >= model.order() || rank < 0 || rank >= model.rank())
    throw PreconditionError("grad_factor_entry: mode or rank out of range");
  const auto idx0 = zero_based(idx);
  const double q = model.evaluate(idx0);
  const double p = other_mode_product(model, idx0, mode, rank);
  const double w = 1.0 / (visit_count + cfg.penalty_epsilon);
  return -(target - q) * p - 2.0 * cfg.penalty_weight * w * q * p;
}

UpdateReport bcd_update(CpModel& model, const Transition& transition, StatTables& tables,
                        const LearnerConfig& cfg, std::uint64_t t, TouchCounter* counter) {
  if (t < 1) throw PreconditionError("bcd_update: time step must be >= 1");
  model.check_index(transition.state_action);
  if (!transition.terminal) model.check_state_index(transition.next_state);

  const auto idx0 = zero_based(transition.state_action);
  const auto R = static_cast<std::size_t>(model.rank());
  const int N = model.order();

  UpdateReport report;
  report.learning_rate = cfg.learning_rate(t);
  report.target = transition.terminal
                      ? transition.reward
                      : transition.reward +
                            cfg.gamma * max_over_actions(model, zero_based(transition.next_state), counter);

  const double visits = static_cast<double>(tables.visits_at(tables.pair_key(idx0)));
  const double weight = 1.0 / (visits + cfg.penalty_epsilon);
  const double lambda = cfg.penalty_weight;
  const double alpha = report.learning_rate;

  report.q_before = model.evaluate(idx0, counter);
  double q = report.q_before;
  report.inner_iterations.assign(static_cast<std::size_t>(N), 0);

  std::vector<double> others(R);
  for (int n = 0; n < N; ++n) {
    auto row = model.row(n, idx0[static_cast<std::size_t>(n)]);
    // Other modes are held fixed while this block is optimized.
    std::fill(others.begin(), others.end(), 1.0);
    for (int m = 0; m < N; ++m) {
      if (m == n) continue;
      auto other = model.row(m, idx0[static_cast<std::size_t>(m)]);
      for (std::size_t r = 0; r < R; ++r) others[r] *= other[r];
    }
    if (counter) counter->reads += R * static_cast<std::size_t>(N - 1);

    double step = alpha;
    if (cfg.max_step_gain) {
      double norm2 = 0.0;
      for (double o : others) norm2 += o * o;
      if (alpha * norm2 > *cfg.max_step_gain) step = *cfg.max_step_gain / norm2;
    }

    double q_prev = q;
    for (int it = 0; it < cfg.max_inner_iterations; ++it) {
      const double coeff = -(report.target - q) - 2.0 * lambda * weight * q;
      double q_curr = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        row[r] -= step * coeff * others[r];
        q_curr += row[r] * others[r];
      }
      if (counter) {
        counter->reads += R;
        counter->writes += R;
      }
      ++report.inner_iterations[static_cast<std::size_t>(n)];
      q = q_curr;
      if (std::abs(q_curr - q_prev) < cfg.tolerance) break;
      q_prev = q_curr;
    }
  }

  if (cfg.q_clip && std::isfinite(q) && std::abs(q) > *cfg.q_clip) {
    // Scaling every touched row by beta scales this entry by beta^N.
    const double beta = std::pow(*cfg.q_clip / std::abs(q), 1.0 / N);
    for (int n = 0; n < N; ++n)
      for (double& v : model.row(n, idx0[static_cast<std::size_t>(n)])) v *= beta;
    if (counter) counter->writes += R * static_cast<std::size_t>(N);
    q = model.evaluate(idx0, counter);
    report.clipped = true;
  }

  if (!std::isfinite(q)) {
    throw DivergenceError("bcd_update: non-finite Q-value after update (q = " +
                              std::to_string(q) + ")",
                          transition.state_action.indices, q);
  }

  report.q_after = q;
  report.q_error = std::abs(report.q_before - report.q_after);
  tables.set_q_error(idx0, report.q_error);
  tables.record_visit(idx0);
  return report;
}

}  // namespace teql
