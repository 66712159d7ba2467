#include "teql/cp_model.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "teql/error.hpp"

namespace teql {

namespace {

constexpr std::array<char, 8> kMagic = {'T', 'E', 'Q', 'L', 'C', 'P', '0', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw PreconditionError("truncated model stream");
  return value;
}

}  // namespace

CpModel::CpModel(std::vector<int> dims, int rank, int n_state_dims)
    : dims_(std::move(dims)), rank_(rank), n_state_dims_(n_state_dims) {
  if (dims_.empty()) throw PreconditionError("CpModel: dims must be non-empty");
  if (rank_ < 1) throw PreconditionError("CpModel: rank must be >= 1");
  if (n_state_dims_ < 0 || n_state_dims_ >= order())
    throw PreconditionError("CpModel: need 0 <= n_state_dims < N (at least one action mode)");
  factors_.reserve(dims_.size());
  for (int d : dims_) {
    if (d < 1) throw PreconditionError("CpModel: every dimension must be positive");
    factors_.emplace_back(static_cast<std::size_t>(d) * static_cast<std::size_t>(rank_), 0.0);
  }
  for (int n = n_state_dims_; n < order(); ++n)
    action_grid_size_ *= static_cast<std::size_t>(dims_[static_cast<std::size_t>(n)]);
}

std::span<double> CpModel::row(int mode, int row) {
  auto& f = factors_[static_cast<std::size_t>(mode)];
  return {f.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(rank_),
          static_cast<std::size_t>(rank_)};
}

std::span<const double> CpModel::row(int mode, int row) const {
  const auto& f = factors_[static_cast<std::size_t>(mode)];
  return {f.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(rank_),
          static_cast<std::size_t>(rank_)};
}

void CpModel::check_index(const IndexTuple& idx) const {
  if (idx.size() != dims_.size())
    throw PreconditionError("index tuple has " + std::to_string(idx.size()) +
                            " components, model order is " + std::to_string(order()));
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    if (idx[n] < 1 || idx[n] > dims_[n])
      throw PreconditionError("index component " + std::to_string(n + 1) + " = " +
                              std::to_string(idx[n]) + " outside [1, " +
                              std::to_string(dims_[n]) + "]");
  }
}

void CpModel::check_state_index(const IndexTuple& idx) const {
  if (idx.size() != static_cast<std::size_t>(n_state_dims_))
    throw PreconditionError("state tuple has " + std::to_string(idx.size()) +
                            " components, model has " + std::to_string(n_state_dims_) +
                            " state modes");
  for (std::size_t n = 0; n < idx.size(); ++n) {
    if (idx[n] < 1 || idx[n] > dims_[n])
      throw PreconditionError("state index component " + std::to_string(n + 1) +
                              " outside [1, " + std::to_string(dims_[n]) + "]");
  }
}

double CpModel::evaluate(std::span<const int> idx0, TouchCounter* counter) const {
  const auto R = static_cast<std::size_t>(rank_);
  double q = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    double p = 1.0;
    for (std::size_t n = 0; n < dims_.size(); ++n)
      p *= factors_[n][static_cast<std::size_t>(idx0[n]) * R + r];
    q += p;
  }
  if (counter) counter->reads += R * dims_.size();
  return q;
}

void CpModel::action_values(std::span<const int> state0, std::span<double> out,
                            TouchCounter* counter) const {
  const auto R = static_cast<std::size_t>(rank_);
  const auto S = static_cast<std::size_t>(n_state_dims_);
  const std::size_t N = dims_.size();

  // Partial products over the state modes are shared by every action.
  std::vector<double> state_part(R, 1.0);
  for (std::size_t n = 0; n < S; ++n) {
    const double* f = factors_[n].data() + static_cast<std::size_t>(state0[n]) * R;
    for (std::size_t r = 0; r < R; ++r) state_part[r] *= f[r];
  }

  if (N - S == 1) {
    const double* fa = factors_[S].data();
    for (std::size_t j = 0; j < action_grid_size_; ++j) {
      double q = 0.0;
      for (std::size_t r = 0; r < R; ++r) q += state_part[r] * fa[j * R + r];
      out[j] = q;
    }
  } else {
    std::vector<int> a0(N - S, 0);
    std::vector<double> prod(R);
    for (std::size_t j = 0; j < action_grid_size_; ++j) {
      decode_action(j, a0);
      prod = state_part;
      for (std::size_t m = 0; m < a0.size(); ++m) {
        const double* f = factors_[S + m].data() + static_cast<std::size_t>(a0[m]) * R;
        for (std::size_t r = 0; r < R; ++r) prod[r] *= f[r];
      }
      double q = 0.0;
      for (double v : prod) q += v;
      out[j] = q;
    }
  }
  if (counter) counter->reads += R * S + action_grid_size_ * R * (N - S);
}

void CpModel::decode_action(std::size_t linear, std::span<int> out0) const {
  for (int n = order() - 1; n >= n_state_dims_; --n) {
    const auto d = static_cast<std::size_t>(dims_[static_cast<std::size_t>(n)]);
    out0[static_cast<std::size_t>(n - n_state_dims_)] = static_cast<int>(linear % d);
    linear /= d;
  }
}

double evaluate_q(const CpModel& model, const IndexTuple& idx) {
  model.check_index(idx);
  std::vector<int> idx0(idx.indices);
  for (int& i : idx0) --i;
  return model.evaluate(idx0);
}

ActionMax max_q_over_actions(const CpModel& model, const IndexTuple& state_idx) {
  model.check_state_index(state_idx);
  std::vector<int> s0(state_idx.indices);
  for (int& i : s0) --i;
  std::vector<double> q(model.action_grid_size());
  model.action_values(s0, q);

  ActionMax best;
  best.value = q[0];
  for (std::size_t j = 1; j < q.size(); ++j) {
    if (q[j] > best.value) {
      best.value = q[j];
      best.linear = j;
    }
  }
  std::vector<int> a0(static_cast<std::size_t>(model.n_action_dims()));
  model.decode_action(best.linear, a0);
  for (int& i : a0) ++i;
  best.action = IndexTuple(std::move(a0));
  return best;
}

std::size_t parameter_count(const CpModel& model) {
  std::size_t sum = 0;
  for (int d : model.dims()) sum += static_cast<std::size_t>(d);
  return static_cast<std::size_t>(model.rank()) * sum;
}

std::size_t effective_dimension(const CpModel& model) {
  return static_cast<std::size_t>(model.rank()) * static_cast<std::size_t>(model.order());
}

CpModel init_model(std::vector<int> dims, int rank, int n_state_dims, std::uint64_t seed,
                   double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale))
    throw PreconditionError("init_model: scale must be finite and >= 0");
  CpModel model(std::move(dims), rank, n_state_dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int n = 0; n < model.order(); ++n)
    for (double& v : model.factor(n)) v = scale * dist(rng);
  return model;
}

void save_model(const CpModel& model, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  write_pod(out, static_cast<std::uint32_t>(model.order()));
  write_pod(out, static_cast<std::uint32_t>(model.rank()));
  write_pod(out, static_cast<std::uint32_t>(model.n_state_dims()));
  for (int d : model.dims()) write_pod(out, static_cast<std::uint32_t>(d));
  for (int n = 0; n < model.order(); ++n) {
    auto f = model.factor(n);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_model: write failed");
}

CpModel load_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw PreconditionError("load_model: bad magic");
  const auto order = read_pod<std::uint32_t>(in);
  const auto rank = read_pod<std::uint32_t>(in);
  const auto n_state = read_pod<std::uint32_t>(in);
  std::vector<int> dims(order);
  for (auto& d : dims) d = static_cast<int>(read_pod<std::uint32_t>(in));
  CpModel model(std::move(dims), static_cast<int>(rank), static_cast<int>(n_state));
  for (int n = 0; n < model.order(); ++n) {
    auto f = model.factor(n);
    in.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!in) throw PreconditionError("load_model: truncated factor data");
  }
  return model;
}

}  // namespace teql
