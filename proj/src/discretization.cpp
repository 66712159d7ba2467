#include "teql/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "teql/error.hpp"

namespace teql {

void DimSpec::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw PreconditionError("DimSpec: need finite lo < hi");
  if (bins < 2) throw PreconditionError("DimSpec: bins must be >= 2");
}

void DiscretizationSpec::validate() const {
  if (action.empty()) throw PreconditionError("DiscretizationSpec: no action dimensions");
  for (const auto& d : state) d.validate();
  for (const auto& d : action) d.validate();
}

std::vector<int> DiscretizationSpec::tensor_dims() const {
  std::vector<int> dims;
  dims.reserve(state.size() + action.size());
  for (const auto& d : state) dims.push_back(d.bins);
  for (const auto& d : action) dims.push_back(d.bins);
  return dims;
}

std::size_t DiscretizationSpec::total_pairs() const {
  std::size_t total = 1;
  for (int d : tensor_dims()) total *= static_cast<std::size_t>(d);
  return total;
}

int discretize_component(double x, const DimSpec& dim) {
  if (std::isnan(x)) throw PreconditionError("discretize_component: NaN input");
  const double clamped = std::clamp(x, dim.lo, dim.hi);
  const double u = (clamped - dim.lo) / (dim.hi - dim.lo);
  // The 1e-9 bin fraction absorbs rounding so grid nodes map back onto
  // their own index (lo + k * spacing can land one ulp below the edge).
  const int i = static_cast<int>(std::floor(u * (dim.bins - 1) + 1e-9)) + 1;
  return std::clamp(i, 1, dim.bins);
}

IndexTuple discretize_state(std::span<const double> s, const DiscretizationSpec& spec) {
  if (s.size() != spec.state.size())
    throw PreconditionError("discretize_state: state has wrong dimension");
  std::vector<int> idx(s.size());
  for (std::size_t d = 0; d < s.size(); ++d) idx[d] = discretize_component(s[d], spec.state[d]);
  return IndexTuple(std::move(idx));
}

IndexTuple discretize_state_action(std::span<const double> s, std::span<const double> a,
                                   const DiscretizationSpec& spec) {
  if (s.size() != spec.state.size() || a.size() != spec.action.size())
    throw PreconditionError("discretize_state_action: dimension mismatch");
  std::vector<int> idx;
  idx.reserve(s.size() + a.size());
  for (std::size_t d = 0; d < s.size(); ++d)
    idx.push_back(discretize_component(s[d], spec.state[d]));
  for (std::size_t j = 0; j < a.size(); ++j)
    idx.push_back(discretize_component(a[j], spec.action[j]));
  return IndexTuple(std::move(idx));
}

double action_value_of_index(int j, const DimSpec& dim) {
  if (j < 1 || j > dim.bins) throw PreconditionError("action_value_of_index: j out of range");
  if (j == dim.bins) return dim.hi;
  return dim.lo + static_cast<double>(j - 1) / (dim.bins - 1) * (dim.hi - dim.lo);
}

std::vector<double> action_vector(const IndexTuple& action, const DiscretizationSpec& spec) {
  if (action.size() != spec.action.size())
    throw PreconditionError("action_vector: dimension mismatch");
  std::vector<double> a(action.size());
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = action_value_of_index(action[j], spec.action[j]);
  return a;
}

namespace presets {

DiscretizationSpec pendulum(int theta_bins, int speed_bins, int action_bins) {
  constexpr double pi = std::numbers::pi;
  return {{{-pi, pi, theta_bins}, {-8.0, 8.0, speed_bins}}, {{-2.0, 2.0, action_bins}}};
}

DiscretizationSpec cartpole(int x_bins, int v_bins, int theta_bins, int omega_bins,
                            int action_bins) {
  return {{{-4.8, 4.8, x_bins}, {-4.0, 4.0, v_bins}, {-0.418, 0.418, theta_bins},
           {-4.0, 4.0, omega_bins}},
          {{-1.0, 1.0, action_bins}}};
}

std::vector<Granularity> pendulum_granularities() {
  return {{"very_coarse", pendulum(8, 8, 4)},
          {"coarse", pendulum(15, 15, 8)},
          {"median", pendulum(20, 20, 10)},
          {"fine", pendulum(30, 30, 15)},
          {"very_fine", pendulum(40, 40, 20)}};
}

std::vector<Granularity> cartpole_granularities() {
  return {{"very_coarse", cartpole(5, 5, 8, 8, 4)},
          {"coarse", cartpole(8, 8, 15, 15, 8)},
          {"median", cartpole(10, 10, 20, 20, 10)},
          {"fine", cartpole(15, 15, 30, 30, 15)},
          {"very_fine", cartpole(20, 20, 40, 40, 20)}};
}

}  // namespace presets

}  // namespace teql
