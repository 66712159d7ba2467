#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <vector>

namespace teql {

/// Counts factor-matrix entry reads and writes. Threaded through the hot
/// paths as an optional pointer so cost can be measured without changing
/// the arithmetic.
struct TouchCounter {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;

  std::uint64_t total() const noexcept { return reads + writes; }
};

/// Tensor index tuple (i_1, ..., i_k). Components are 1-based: i_n lies in
/// [1, d_n]. Used both for full state-action tuples and for the state-only
/// or action-only parts of one.
struct IndexTuple {
  std::vector<int> indices;

  IndexTuple() = default;
  IndexTuple(std::initializer_list<int> values) : indices(values) {}
  explicit IndexTuple(std::vector<int> values) : indices(std::move(values)) {}

  std::size_t size() const noexcept { return indices.size(); }
  int operator[](std::size_t n) const { return indices[n]; }
  bool operator==(const IndexTuple&) const = default;
};

/// Rank-R CP factorization of an order-N tensor over (state dims, action dims).
///
/// Factor matrix n is stored row-major as d_n x R, so the R weights of row
/// i_n are contiguous. The first `n_state_dims` modes index the state, the
/// remaining modes index the action.
class CpModel {
 public:
  CpModel(std::vector<int> dims, int rank, int n_state_dims);

  int rank() const noexcept { return rank_; }
  int order() const noexcept { return static_cast<int>(dims_.size()); }
  int n_state_dims() const noexcept { return n_state_dims_; }
  int n_action_dims() const noexcept { return order() - n_state_dims_; }
  const std::vector<int>& dims() const noexcept { return dims_; }

  /// Number of discrete actions: product of the action-mode sizes.
  std::size_t action_grid_size() const noexcept { return action_grid_size_; }

  std::span<double> factor(int mode) { return factors_[static_cast<std::size_t>(mode)]; }
  std::span<const double> factor(int mode) const {
    return factors_[static_cast<std::size_t>(mode)];
  }

  /// Row `row` (0-based) of factor matrix `mode`: the R weights F_mode(row, .).
  std::span<double> row(int mode, int row);
  std::span<const double> row(int mode, int row) const;

  /// Throws PreconditionError unless `idx` is a valid 1-based full tuple.
  void check_index(const IndexTuple& idx) const;
  /// Throws PreconditionError unless `idx` is a valid 1-based state tuple.
  void check_state_index(const IndexTuple& idx) const;

  /// Unchecked evaluation at a 0-based full tuple.
  double evaluate(std::span<const int> idx0, TouchCounter* counter = nullptr) const;

  /// Q(state, a) for every grid action a, in row-major linear order (last
  /// action mode fastest). `out` must hold action_grid_size() values.
  void action_values(std::span<const int> state0, std::span<double> out,
                     TouchCounter* counter = nullptr) const;

  /// Decodes a linear action index into 0-based action-mode indices.
  void decode_action(std::size_t linear, std::span<int> out0) const;

  bool operator==(const CpModel&) const = default;

 private:
  std::vector<int> dims_;
  int rank_ = 0;
  int n_state_dims_ = 0;
  std::size_t action_grid_size_ = 1;
  std::vector<std::vector<double>> factors_;
};

/// Q(i_1..i_N) = sum_r prod_n F_n(i_n, r) at a 1-based tuple; bounds checked.
double evaluate_q(const CpModel& model, const IndexTuple& idx);

struct ActionMax {
  IndexTuple action;  // 1-based action-mode indices
  std::size_t linear = 0;
  double value = 0.0;
};

/// Greedy action over the full action grid for a 1-based state tuple. Ties go
/// to the lowest linear action index.
ActionMax max_q_over_actions(const CpModel& model, const IndexTuple& state_idx);

/// R * sum_n d_n.
std::size_t parameter_count(const CpModel& model);

/// d_eff = R * N.
std::size_t effective_dimension(const CpModel& model);

/// Factors i.i.d. uniform on [-scale, scale], deterministic in `seed`.
CpModel init_model(std::vector<int> dims, int rank, int n_state_dims, std::uint64_t seed,
                   double scale);

/// Binary layout: magic "TEQLCP01", u32 N, u32 R, u32 n_state_dims,
/// u32 dims[N], then N factor matrices as f64, mode order, row-major.
void save_model(const CpModel& model, std::ostream& out);
CpModel load_model(std::istream& in);

}  // namespace teql
