#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "teql/cp_model.hpp"

namespace teql {

/// Uniform grid over [lo, hi] with `bins` nodes.
struct DimSpec {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 2;

  void validate() const;
  /// Spacing between adjacent grid nodes, (hi - lo) / (bins - 1).
  double node_spacing() const { return (hi - lo) / (bins - 1); }
  bool operator==(const DimSpec&) const = default;
};

/// Per-dimension grids for the state and action vectors. Tensor modes are
/// ordered state dims first, then action dims.
struct DiscretizationSpec {
  std::vector<DimSpec> state;
  std::vector<DimSpec> action;

  void validate() const;
  std::vector<int> tensor_dims() const;
  std::size_t n_state_dims() const { return state.size(); }
  std::size_t n_action_dims() const { return action.size(); }
  /// Product of all bin counts (number of state-action pairs).
  std::size_t total_pairs() const;
  bool operator==(const DiscretizationSpec&) const = default;
};

/// i = floor((clamp(x) - lo) / (hi - lo) * (bins - 1)) + 1, in [1, bins].
/// Values outside [lo, hi] are clamped. NaN throws PreconditionError.
int discretize_component(double x, const DimSpec& dim);

/// 1-based state tuple.
IndexTuple discretize_state(std::span<const double> s, const DiscretizationSpec& spec);

/// 1-based state-action tuple: state dims first, then action dims.
IndexTuple discretize_state_action(std::span<const double> s, std::span<const double> a,
                                   const DiscretizationSpec& spec);

/// Grid node for 1-based index j: lo + (j - 1) / (bins - 1) * (hi - lo).
double action_value_of_index(int j, const DimSpec& dim);

/// Continuous action vector for a 1-based action tuple.
std::vector<double> action_vector(const IndexTuple& action, const DiscretizationSpec& spec);

namespace presets {

/// State (theta, theta_dot) on [-pi, pi] x [-8, 8], torque on [-2, 2].
DiscretizationSpec pendulum(int theta_bins = 20, int speed_bins = 20, int action_bins = 10);

/// State (x, x_dot, theta, theta_dot), action a in [-1, 1] (force 10 a N).
DiscretizationSpec cartpole(int x_bins = 10, int v_bins = 10, int theta_bins = 20,
                            int omega_bins = 20, int action_bins = 10);

struct Granularity {
  std::string name;
  DiscretizationSpec spec;
};

/// Five resolutions from very coarse (8,8,4) to very fine (40,40,20).
std::vector<Granularity> pendulum_granularities();

/// Five resolutions from very coarse (5,5,8,8,4) to very fine (20,20,40,40,20).
std::vector<Granularity> cartpole_granularities();

}  // namespace presets

}  // namespace teql
