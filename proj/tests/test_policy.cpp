#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "teql/error.hpp"
#include "teql/policy.hpp"

using namespace teql;

namespace {

// Populates visit counts and errors for one state with random values.
void scatter_stats(StatTables& t, const std::vector<int>& s0, std::size_t grid,
                   std::mt19937_64& rng) {
  std::uniform_int_distribution<int> visits(0, 6);
  std::uniform_real_distribution<double> err(0.0, 2.0);
  for (std::size_t a = 0; a < grid; ++a) {
    std::vector<int> idx0(s0);
    idx0.push_back(static_cast<int>(a));
    const int n = visits(rng);
    for (int k = 0; k < n; ++k) t.record_visit(idx0);
    if (n > 0) t.set_q_error(idx0, err(rng));
  }
}

}  // namespace

TEST_CASE("EU values match an independent evaluation of the exploration rule") {
  std::mt19937_64 rng(41);
  int instances = 0;
  while (instances < 10000) {
    const std::vector<int> dims = {4, 3, 6};
    const CpModel m = init_model(dims, 3, 2, rng(), 1.0);
    StatTables t(dims, 2);
    const std::vector<int> s0 = {std::uniform_int_distribution<int>(0, 3)(rng),
                                 std::uniform_int_distribution<int>(0, 2)(rng)};
    scatter_stats(t, s0, 6, rng);
    const double c = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
    const IndexTuple state{s0[0] + 1, s0[1] + 1};
    const auto eu = euge_values(m, t, state, c);
    const auto ucb = ucb_values(m, t, state, c);
    const double total = static_cast<double>(t.state_total(state));
    for (int a = 1; a <= 6; ++a) {
      const IndexTuple sa{state[0], state[1], a};
      const double n = static_cast<double>(t.visits(sa));
      const double bonus = total > 1 ? std::sqrt(std::log(total) / (n + 1.0)) : 0.0;
      const double q = test::brute_force_q(m, {s0[0], s0[1], a - 1});
      CHECK(std::abs(eu[static_cast<std::size_t>(a - 1)] - (q + c * (t.q_error(sa) + bonus))) <= 1e-12);
      CHECK(std::abs(ucb[static_cast<std::size_t>(a - 1)] - (q + c * bonus)) <= 1e-12);
      ++instances;
    }
  }
}

TEST_CASE("with c = 0 EUGE selects the greedy action") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<int> dims = {5, 8};
    const CpModel m = init_model(dims, 4, 1, rng(), 1.0);
    StatTables t(dims, 1);
    const std::vector<int> s0 = {std::uniform_int_distribution<int>(0, 4)(rng)};
    scatter_stats(t, s0, 8, rng);
    const IndexTuple s{s0[0] + 1};
    CHECK(argmax_lowest(euge_values(m, t, s, 0.0)) == max_q_over_actions(m, s).linear);
    PolicyConfig cfg;
    cfg.kind = PolicyKind::greedy;
    Rng r(1);
    CHECK(select_action(m, t, s, cfg, 0, r) == greedy_select(m, s));
  }
}

TEST_CASE("property: the visit bonus strictly decreases in the pair count") {
  for (std::uint64_t total : {2ull, 3ull, 10ull, 1000ull, 1000000ull}) {
    double prev = ucb_bonus(total, 0);
    CHECK(prev > 0.0);
    for (std::uint64_t n = 1; n <= 2000; ++n) {
      const double b = ucb_bonus(total, n);
      CHECK(b < prev);
      prev = b;
    }
  }
  CHECK(ucb_bonus(0, 0) == 0.0);
  CHECK(ucb_bonus(1, 0) == 0.0);
  CHECK(ucb_bonus(std::uint64_t{100}, 3) == doctest::Approx(std::sqrt(std::log(100.0) / 4.0)));
}

TEST_CASE("ties break toward the lowest linear action index") {
  CHECK(argmax_lowest({1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK(argmax_lowest({5.0, 5.0}) == 0);
  CHECK_THROWS_AS(argmax_lowest({}), PreconditionError);

  const CpModel zero({2, 3, 2}, 2, 1);
  const StatTables t({2, 3, 2}, 1);
  PolicyConfig cfg;
  CHECK(euge_select(zero, t, {1}, cfg) == IndexTuple{1, 1});
  CHECK(ucb_select(zero, t, {2}, cfg) == IndexTuple{1, 1});
  CHECK(action_tuple(zero, 5) == IndexTuple{3, 2});
}

TEST_CASE("an unvisited action wins once the state has history") {
  const std::vector<int> dims = {1, 3};
  const CpModel zero(dims, 1, 1);
  StatTables t(dims, 1);
  for (int k = 0; k < 5; ++k) {
    t.record_visit(std::vector<int>{0, 0});
    t.record_visit(std::vector<int>{0, 1});
  }
  PolicyConfig cfg;
  CHECK(euge_select(zero, t, {1}, cfg) == IndexTuple{3});
}

TEST_CASE("the error term pulls EUGE toward poorly fitted pairs") {
  const std::vector<int> dims = {1, 3};
  const CpModel zero(dims, 1, 1);
  StatTables t(dims, 1);
  for (int a = 0; a < 3; ++a)
    for (int k = 0; k < 4; ++k) t.record_visit(std::vector<int>{0, a});
  t.set_q_error(std::vector<int>{0, 2}, 0.3);
  PolicyConfig cfg;
  CHECK(euge_select(zero, t, {1}, cfg) == IndexTuple{3});
  CHECK(ucb_select(zero, t, {1}, cfg) == IndexTuple{1});
}

TEST_CASE("epsilon-greedy schedule and extremes") {
  PolicyConfig cfg{PolicyKind::epsilon_greedy, 2.0, 1.0, 0.99};
  CHECK(cfg.epsilon_at(0) == 1.0);
  CHECK(cfg.epsilon_at(100) == doctest::Approx(std::pow(0.99, 100)));

  std::mt19937_64 gen(43);
  const CpModel m = init_model({3, 5}, 3, 1, 4, 1.0);
  Rng rng(7);
  for (int k = 0; k < 200; ++k) CHECK(epsilon_greedy_select(m, {2}, 0.0, rng) == greedy_select(m, {2}));

  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int k = 0; k < n; ++k) ++counts[static_cast<std::size_t>(epsilon_greedy_select(m, {2}, 1.0, rng)[0] - 1)];
  for (int c : counts) CHECK(static_cast<double>(c) / n == doctest::Approx(0.2).epsilon(0.05));

  Rng a(3), b(3);
  for (int k = 0; k < 100; ++k) CHECK(epsilon_greedy_select(m, {1}, 0.3, a) == epsilon_greedy_select(m, {1}, 0.3, b));
  CHECK_THROWS_AS(epsilon_greedy_select(m, {1}, 1.5, a), PreconditionError);
}

TEST_CASE("policy kinds round-trip through their names") {
  for (PolicyKind k : {PolicyKind::euge, PolicyKind::ucb, PolicyKind::epsilon_greedy, PolicyKind::greedy})
    CHECK(policy_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(policy_kind_from_string("softmax"), PreconditionError);
  PolicyConfig bad;
  bad.exploration_c = 0.0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = PolicyConfig{};
  bad.epsilon_decay = 0.0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}
