#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "teql/cp_model.hpp"

namespace teql {

/// Sparse visit counts N(s,a), per-state totals N_total(s) and last
/// decomposition errors Q_error(s,a). Absent keys read as zero, so memory
/// grows with the number of distinct visited pairs only.
///
/// Pair keys are `state_key * |A| + action_linear`, where state_key is the
/// mixed-radix packing of the 0-based state indices and action_linear is the
/// row-major action index used by CpModel::action_values.
class StatTables {
 public:
  StatTables(std::vector<int> dims, int n_state_dims);

  const std::vector<int>& dims() const noexcept { return dims_; }
  std::size_t action_grid_size() const noexcept { return action_grid_; }

  // 1-based accessors.
  std::uint64_t visits(const IndexTuple& state_action) const;
  std::uint64_t state_total(const IndexTuple& state) const;
  double q_error(const IndexTuple& state_action) const;

  // Packed-key accessors used on the hot path.
  std::uint64_t state_key(std::span<const int> state0) const;
  std::uint64_t pair_key(std::uint64_t state_key, std::size_t action_linear) const {
    return state_key * action_grid_ + action_linear;
  }
  std::uint64_t pair_key(std::span<const int> idx0) const;
  std::uint64_t visits_at(std::uint64_t pair_key) const;
  std::uint64_t state_total_at(std::uint64_t state_key) const;
  double q_error_at(std::uint64_t pair_key) const;

  /// N(s,a) += 1 and N_total(s) += 1 for a 0-based full tuple.
  void record_visit(std::span<const int> idx0);
  void set_q_error(std::span<const int> idx0, double value);

  std::size_t visited_pairs() const noexcept { return visit_.size(); }
  std::size_t visited_states() const noexcept { return state_total_.size(); }
  std::size_t error_entries() const noexcept { return q_error_.size(); }
  /// Total stored entries across the three maps.
  std::size_t stored_entries() const noexcept {
    return visit_.size() + state_total_.size() + q_error_.size();
  }

  /// Checks N_total(s) == sum_a N(s,a) for every stored state.
  bool totals_consistent() const;

  /// One line per visited or error-carrying pair, sorted by key:
  /// `i_1,...,i_N count q_error` (1-based indices).
  void dump(std::ostream& out) const;
  static StatTables load(std::istream& in, std::vector<int> dims, int n_state_dims);

 private:
  std::vector<int> unpack_pair(std::uint64_t key) const;

  std::vector<int> dims_;
  int n_state_dims_;
  std::size_t action_grid_ = 1;
  std::unordered_map<std::uint64_t, std::uint64_t> visit_;
  std::unordered_map<std::uint64_t, std::uint64_t> state_total_;
  std::unordered_map<std::uint64_t, double> q_error_;
};

}  // namespace teql
