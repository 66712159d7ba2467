#include "teql/oracle.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

#include "teql/error.hpp"
#include "teql/stat_tables.hpp"

namespace teql {

namespace {

std::size_t checked_size(const CpModel& model) {
  std::size_t total = 1;
  for (int d : model.dims()) {
    total *= static_cast<std::size_t>(d);
    if (total > kDenseCap)
      throw PreconditionError("dense_reconstruct: tensor exceeds " + std::to_string(kDenseCap) +
                              " entries");
  }
  return total;
}

void decode(std::size_t linear, const std::vector<int>& dims, std::vector<int>& idx) {
  for (std::size_t n = dims.size(); n-- > 0;) {
    const auto d = static_cast<std::size_t>(dims[n]);
    idx[n] = static_cast<int>(linear % d);
    linear /= d;
  }
}

}  // namespace

std::vector<double> dense_reconstruct(const CpModel& model) {
  const std::size_t total = checked_size(model);
  const auto& dims = model.dims();
  std::vector<double> dense(total, 0.0);
  std::vector<int> idx(dims.size());
  // Accumulate one rank-one outer product at a time.
  for (int r = 0; r < model.rank(); ++r) {
    for (std::size_t k = 0; k < total; ++k) {
      decode(k, dims, idx);
      double p = 1.0;
      for (int n = 0; n < model.order(); ++n)
        p *= model.row(n, idx[static_cast<std::size_t>(n)])[static_cast<std::size_t>(r)];
      dense[k] += p;
    }
  }
  return dense;
}

std::vector<double> dense_reconstruct_parallel(const CpModel& model) {
  const std::size_t total = checked_size(model);
  const auto& dims = model.dims();
  std::vector<double> dense(total, 0.0);
  const auto count = static_cast<long long>(total);
#pragma omp parallel
  {
    std::vector<int> idx(dims.size());
#pragma omp for schedule(static)
    for (long long k = 0; k < count; ++k) {
      decode(static_cast<std::size_t>(k), dims, idx);
      double sum = 0.0;
      // Same rank order as the serial kernel so the sums agree bitwise.
      for (int r = 0; r < model.rank(); ++r) {
        double p = 1.0;
        for (int n = 0; n < model.order(); ++n)
          p *= model.row(n, idx[static_cast<std::size_t>(n)])[static_cast<std::size_t>(r)];
        sum += p;
      }
      dense[static_cast<std::size_t>(k)] = sum;
    }
  }
  return dense;
}

double finite_diff_grad(const std::function<double(double)>& f, double x, double h) {
  if (!(h > 0.0)) throw PreconditionError("finite_diff_grad: h must be > 0");
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

void RegretTrace::push(double regret) {
  instantaneous.push_back(regret);
  cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + regret);
}

double RegretTrace::mean(std::size_t begin, std::size_t end) const {
  end = std::min(end, instantaneous.size());
  if (begin >= end) throw PreconditionError("RegretTrace::mean: empty range");
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) sum += instantaneous[k];
  return sum / static_cast<double>(end - begin);
}

std::vector<double> RegretTrace::window_average(std::size_t window) const {
  if (window == 0) throw PreconditionError("window_average: window must be > 0");
  std::vector<double> out;
  for (std::size_t begin = 0; begin + window <= instantaneous.size(); begin += window)
    out.push_back(mean(begin, begin + window));
  return out;
}

void RegretTrace::write_csv(std::ostream& out) const {
  out << "step,instantaneous_regret,cumulative_regret\n";
  for (std::size_t k = 0; k < instantaneous.size(); ++k)
    out << fmt::format("{},{},{}\n", k + 1, instantaneous[k], cumulative[k]);
}

RegretTrace run_regret_with(
    const SyntheticMdp& mdp, std::span<const double> q_star, std::uint64_t steps,
    std::uint64_t seed, int restart_interval, const RegretChooser& choose,
    const std::function<void(int, int, double, int, std::uint64_t)>& on_transition) {
  mdp.validate();
  const auto S = mdp.n_states;
  const auto A = mdp.n_actions;
  if (q_star.size() != static_cast<std::size_t>(S) * static_cast<std::size_t>(A))
    throw PreconditionError("run_regret_with: Q* has wrong size");
  if (restart_interval < 1) throw PreconditionError("run_regret_with: restart interval must be >= 1");

  Rng rng(seed);
  std::uniform_int_distribution<int> pick_state(0, S - 1);
  RegretTrace trace;
  trace.instantaneous.reserve(steps);
  trace.cumulative.reserve(steps);

  int s = pick_state(rng);
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const int a = choose(s, t, rng);
    if (a < 0 || a >= A) throw PreconditionError("run_regret_with: chooser returned invalid action");
    const auto row = q_star.subspan(static_cast<std::size_t>(s) * A, static_cast<std::size_t>(A));
    const double v_star = *std::max_element(row.begin(), row.end());
    trace.push(v_star - row[static_cast<std::size_t>(a)]);

    const int next = mdp.sample_next(s, a, rng);
    if (on_transition) on_transition(s, a, mdp.r(s, a), next, t);
    s = (t % static_cast<std::uint64_t>(restart_interval) == 0) ? pick_state(rng) : next;
  }
  return trace;
}

RegretTrace run_regret_experiment(const SyntheticMdp& mdp, std::span<const double> q_star,
                                  const RegretSettings& settings, std::uint64_t seed) {
  settings.learner.validate();
  settings.policy.validate();
  std::vector<int> dims = {mdp.n_states, mdp.n_actions};
  CpModel model = init_model(dims, settings.rank, 1, seed ^ 0x9e3779b97f4a7c15ULL,
                             settings.init_scale);
  StatTables tables(dims, 1);
  const int episode_length = settings.restart_interval;

  auto choose = [&](int s, std::uint64_t t, Rng& rng) {
    const IndexTuple action =
        select_action(model, tables, IndexTuple{s + 1}, settings.policy,
                      static_cast<int>((t - 1) / static_cast<std::uint64_t>(episode_length)), rng);
    return action[0] - 1;
  };
  auto learn = [&](int s, int a, double r, int next, std::uint64_t t) {
    Transition tr{IndexTuple{s + 1, a + 1}, IndexTuple{next + 1}, r, false};
    bcd_update(model, tr, tables, settings.learner, t);
  };
  return run_regret_with(mdp, q_star, settings.steps, seed, settings.restart_interval, choose,
                         learn);
}

double fit_slope(std::span<const double> y) {
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) throw PreconditionError("fit_slope: need at least two points");
  const double x_mean = (n - 1.0) / 2.0;
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double dx = static_cast<double>(k) - x_mean;
    sxy += dx * (y[k] - y_mean);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace teql
