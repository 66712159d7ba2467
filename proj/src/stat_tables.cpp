#include "teql/stat_tables.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "teql/error.hpp"

namespace teql {

StatTables::StatTables(std::vector<int> dims, int n_state_dims)
    : dims_(std::move(dims)), n_state_dims_(n_state_dims) {
  if (n_state_dims_ < 0 || n_state_dims_ >= static_cast<int>(dims_.size()))
    throw PreconditionError("StatTables: need 0 <= n_state_dims < N");
  long double cells = 1.0L;
  for (int d : dims_) {
    if (d < 1) throw PreconditionError("StatTables: dimensions must be positive");
    cells *= d;
  }
  if (cells > 1.8e19L) throw PreconditionError("StatTables: index space exceeds 64-bit keys");
  for (std::size_t n = static_cast<std::size_t>(n_state_dims_); n < dims_.size(); ++n)
    action_grid_ *= static_cast<std::size_t>(dims_[n]);
}

std::uint64_t StatTables::state_key(std::span<const int> state0) const {
  std::uint64_t key = 0;
  for (std::size_t n = 0; n < static_cast<std::size_t>(n_state_dims_); ++n)
    key = key * static_cast<std::uint64_t>(dims_[n]) + static_cast<std::uint64_t>(state0[n]);
  return key;
}

std::uint64_t StatTables::pair_key(std::span<const int> idx0) const {
  std::uint64_t key = 0;
  for (std::size_t n = 0; n < dims_.size(); ++n)
    key = key * static_cast<std::uint64_t>(dims_[n]) + static_cast<std::uint64_t>(idx0[n]);
  return key;
}

std::vector<int> StatTables::unpack_pair(std::uint64_t key) const {
  std::vector<int> idx(dims_.size());
  for (std::size_t n = dims_.size(); n-- > 0;) {
    const auto d = static_cast<std::uint64_t>(dims_[n]);
    idx[n] = static_cast<int>(key % d) + 1;
    key /= d;
  }
  return idx;
}

namespace {

std::vector<int> to_zero_based(const IndexTuple& idx, const std::vector<int>& dims,
                               std::size_t expected) {
  if (idx.size() != expected) throw PreconditionError("StatTables: tuple has wrong length");
  std::vector<int> out(idx.indices);
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (out[n] < 1 || out[n] > dims[n]) throw PreconditionError("StatTables: index out of range");
    --out[n];
  }
  return out;
}

}  // namespace

std::uint64_t StatTables::visits(const IndexTuple& state_action) const {
  return visits_at(pair_key(to_zero_based(state_action, dims_, dims_.size())));
}

std::uint64_t StatTables::state_total(const IndexTuple& state) const {
  return state_total_at(
      state_key(to_zero_based(state, dims_, static_cast<std::size_t>(n_state_dims_))));
}

double StatTables::q_error(const IndexTuple& state_action) const {
  return q_error_at(pair_key(to_zero_based(state_action, dims_, dims_.size())));
}

std::uint64_t StatTables::visits_at(std::uint64_t key) const {
  auto it = visit_.find(key);
  return it == visit_.end() ? 0 : it->second;
}

std::uint64_t StatTables::state_total_at(std::uint64_t key) const {
  auto it = state_total_.find(key);
  return it == state_total_.end() ? 0 : it->second;
}

double StatTables::q_error_at(std::uint64_t key) const {
  auto it = q_error_.find(key);
  return it == q_error_.end() ? 0.0 : it->second;
}

void StatTables::record_visit(std::span<const int> idx0) {
  ++visit_[pair_key(idx0)];
  ++state_total_[state_key(idx0)];
}

void StatTables::set_q_error(std::span<const int> idx0, double value) {
  q_error_[pair_key(idx0)] = value;
}

bool StatTables::totals_consistent() const {
  std::unordered_map<std::uint64_t, std::uint64_t> sums;
  for (const auto& [key, count] : visit_) sums[key / action_grid_] += count;
  if (sums.size() != state_total_.size()) return false;
  for (const auto& [key, total] : state_total_) {
    auto it = sums.find(key);
    if (it == sums.end() || it->second != total) return false;
  }
  return true;
}

void StatTables::dump(std::ostream& out) const {
  std::set<std::uint64_t> keys;
  for (const auto& kv : visit_) keys.insert(kv.first);
  for (const auto& kv : q_error_) keys.insert(kv.first);
  for (std::uint64_t key : keys) {
    const auto idx = unpack_pair(key);
    out << fmt::format("{} {} {}\n", fmt::join(idx, ","), visits_at(key), q_error_at(key));
  }
}

StatTables StatTables::load(std::istream& in, std::vector<int> dims, int n_state_dims) {
  StatTables tables(std::move(dims), n_state_dims);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tuple;
    std::uint64_t count = 0;
    double err = 0.0;
    if (!(ls >> tuple >> count >> err)) throw PreconditionError("StatTables::load: bad line '" + line + "'");
    std::vector<int> idx;
    std::istringstream ts(tuple);
    std::string part;
    while (std::getline(ts, part, ',')) idx.push_back(std::stoi(part));
    auto idx0 = to_zero_based(IndexTuple(idx), tables.dims_, tables.dims_.size());
    const auto key = tables.pair_key(idx0);
    if (count > 0) {
      tables.visit_[key] = count;
      tables.state_total_[key / tables.action_grid_] += count;
    }
    if (err != 0.0) tables.q_error_[key] = err;
  }
  return tables;
}

}  // namespace teql
