#pragma once

#include <random>
#include <vector>

#include "teql/cp_model.hpp"

namespace teql::test {

/// Sum over r of the product of factor entries, read straight from the factor
/// matrices (no CpModel evaluation code involved).
inline double brute_force_q(const CpModel& m, const std::vector<int>& idx0) {
  double q = 0.0;
  for (int r = 0; r < m.rank(); ++r) {
    double p = 1.0;
    for (int n = 0; n < m.order(); ++n)
      p *= m.factor(n)[static_cast<std::size_t>(idx0[static_cast<std::size_t>(n)] * m.rank() + r)];
    q += p;
  }
  return q;
}

inline std::vector<int> random_dims(std::mt19937_64& rng, int order, int max_dim) {
  std::uniform_int_distribution<int> d(1, max_dim);
  std::vector<int> dims(static_cast<std::size_t>(order));
  for (int& x : dims) x = d(rng);
  return dims;
}

inline IndexTuple random_index(std::mt19937_64& rng, const std::vector<int>& dims) {
  std::vector<int> idx;
  for (int d : dims) idx.push_back(std::uniform_int_distribution<int>(1, d)(rng));
  return IndexTuple(idx);
}

inline std::vector<int> zero_based(const IndexTuple& idx) {
  std::vector<int> out(idx.indices);
  for (int& i : out) --i;
  return out;
}

}  // namespace teql::test
