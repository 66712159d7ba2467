#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "helpers.hpp"
#include "teql/cp_model.hpp"
#include "teql/error.hpp"

using namespace teql;
using teql::test::brute_force_q;

TEST_CASE("evaluate_q matches the brute-force outer-product sum") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int order = 2 + trial % 4;
    const auto dims = test::random_dims(rng, order, 6);
    const int rank = 1 + trial % 7;
    const CpModel m = init_model(dims, rank, order - 1, 100 + trial, 1.3);
    for (int k = 0; k < 20; ++k) {
      const IndexTuple idx = test::random_index(rng, dims);
      CHECK(evaluate_q(m, idx) == doctest::Approx(brute_force_q(m, test::zero_based(idx))).epsilon(1e-13));
    }
  }
}

TEST_CASE("a rank-one model factorizes into its mode vectors") {
  CpModel m({2, 3}, 1, 1);
  m.row(0, 0)[0] = 2.0;
  m.row(0, 1)[0] = -1.0;
  m.row(1, 0)[0] = 0.5;
  m.row(1, 1)[0] = 3.0;
  m.row(1, 2)[0] = 4.0;
  CHECK(evaluate_q(m, {1, 1}) == 1.0);
  CHECK(evaluate_q(m, {1, 3}) == 8.0);
  CHECK(evaluate_q(m, {2, 2}) == -3.0);
}

TEST_CASE("zero model evaluates to zero everywhere") {
  const CpModel m({3, 4, 2}, 5, 2);
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 4; ++j)
      for (int k = 1; k <= 2; ++k) CHECK(evaluate_q(m, {i, j, k}) == 0.0);
}

TEST_CASE("action_values agrees with per-action evaluation") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_state = 1 + trial % 3;
    const int n_action = 1 + trial % 2;
    const auto dims = test::random_dims(rng, n_state + n_action, 5);
    const CpModel m = init_model(dims, 4, n_state, trial, 1.0);
    std::vector<int> state0;
    for (int n = 0; n < n_state; ++n)
      state0.push_back(std::uniform_int_distribution<int>(0, dims[static_cast<std::size_t>(n)] - 1)(rng));
    std::vector<double> q(m.action_grid_size());
    m.action_values(state0, q);
    std::vector<int> a0(static_cast<std::size_t>(n_action));
    for (std::size_t lin = 0; lin < q.size(); ++lin) {
      m.decode_action(lin, a0);
      std::vector<int> full(state0);
      full.insert(full.end(), a0.begin(), a0.end());
      CHECK(q[lin] == doctest::Approx(brute_force_q(m, full)).epsilon(1e-13));
    }
  }
}

TEST_CASE("decode_action is row-major with the last action mode fastest") {
  const CpModel m({2, 3, 4}, 1, 1);
  std::vector<int> a0(2);
  m.decode_action(0, a0);
  CHECK(a0 == std::vector<int>{0, 0});
  m.decode_action(1, a0);
  CHECK(a0 == std::vector<int>{0, 1});
  m.decode_action(4, a0);
  CHECK(a0 == std::vector<int>{1, 0});
  m.decode_action(11, a0);
  CHECK(a0 == std::vector<int>{2, 3});
}

TEST_CASE("max_q_over_actions matches exhaustive enumeration with lowest-index ties") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const auto dims = test::random_dims(rng, 4, 5);
    const CpModel m = init_model(dims, 3, 2, trial, 1.0);
    const IndexTuple s{std::uniform_int_distribution<int>(1, dims[0])(rng),
                       std::uniform_int_distribution<int>(1, dims[1])(rng)};
    double best = -1e300;
    IndexTuple best_a;
    for (int a = 1; a <= dims[2]; ++a)
      for (int b = 1; b <= dims[3]; ++b) {
        const double q = evaluate_q(m, {s[0], s[1], a, b});
        if (q > best) {
          best = q;
          best_a = {a, b};
        }
      }
    const ActionMax got = max_q_over_actions(m, s);
    CHECK(got.value == doctest::Approx(best).epsilon(1e-13));
    CHECK(got.action == best_a);
  }

  CpModel flat({2, 4}, 2, 1);  // all zeros: every action ties
  const ActionMax tie = max_q_over_actions(flat, {2});
  CHECK(tie.linear == 0);
  CHECK(tie.action == IndexTuple{1});
}

TEST_CASE("property: Q is linear in each single factor row") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dims = test::random_dims(rng, 3, 4);
    CpModel m = init_model(dims, 4, 1, trial, 1.0);
    const IndexTuple idx = test::random_index(rng, dims);
    const int mode = trial % 3;
    auto row = m.row(mode, idx[static_cast<std::size_t>(mode)] - 1);
    const std::vector<double> base(row.begin(), row.end());
    std::vector<double> delta(base.size());
    for (double& d : delta) d = std::uniform_real_distribution<double>(-1, 1)(rng);
    const double s = std::uniform_real_distribution<double>(-3, 3)(rng);

    auto q_at = [&](double t) {
      for (std::size_t r = 0; r < base.size(); ++r) row[r] = base[r] + t * delta[r];
      return evaluate_q(m, idx);
    };
    const double q0 = q_at(0.0), q1 = q_at(1.0), qs = q_at(s);
    CHECK(qs == doctest::Approx(q0 + s * (q1 - q0)).epsilon(1e-10));
  }
}

TEST_CASE("property: changing one row only moves entries that share it") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::vector<int> dims = {3, 4, 3};
    CpModel m = init_model(dims, 3, 2, trial, 1.0);
    const CpModel before = m;
    const int mode = trial % 3;
    const int row = std::uniform_int_distribution<int>(0, dims[static_cast<std::size_t>(mode)] - 1)(rng);
    for (double& v : m.row(mode, row)) v += 0.7;
    for (int i = 1; i <= 3; ++i)
      for (int j = 1; j <= 4; ++j)
        for (int k = 1; k <= 3; ++k) {
          const IndexTuple idx{i, j, k};
          if (idx[static_cast<std::size_t>(mode)] - 1 != row)
            CHECK(evaluate_q(m, idx) == evaluate_q(before, idx));
        }
  }
}

TEST_CASE("parameter count and effective dimension") {
  const CpModel m({20, 20, 10}, 10, 2);
  CHECK(parameter_count(m) == 10u * 50u);
  CHECK(effective_dimension(m) == 30u);
  const CpModel c({10, 10, 20, 20, 10}, 10, 4);
  CHECK(parameter_count(c) == 700u);
  CHECK(effective_dimension(c) == 50u);
}

TEST_CASE("init_model is seeded and bounded by the scale") {
  const CpModel a = init_model({5, 6, 7}, 4, 2, 42, 0.3);
  const CpModel b = init_model({5, 6, 7}, 4, 2, 42, 0.3);
  const CpModel c = init_model({5, 6, 7}, 4, 2, 43, 0.3);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (int n = 0; n < a.order(); ++n)
    for (double v : a.factor(n)) CHECK(std::abs(v) <= 0.3);
}

TEST_CASE("touch counter charges one read per factor entry") {
  const CpModel m = init_model({4, 5, 6}, 7, 2, 1, 1.0);
  TouchCounter tc;
  const std::vector<int> idx0 = {1, 2, 3};
  (void)m.evaluate(idx0, &tc);
  CHECK(tc.reads == 7u * 3u);
  CHECK(tc.writes == 0u);
  TouchCounter av;
  std::vector<double> q(m.action_grid_size());
  const std::vector<int> s0 = {1, 2};
  m.action_values(s0, q, &av);
  CHECK(av.reads == 7u * 2u + 6u * 7u);
}

TEST_CASE("binary save and load restores the model exactly") {
  const CpModel m = init_model({3, 8, 2, 5}, 6, 3, 9, 2.0);
  std::stringstream buf;
  save_model(m, buf);
  const CpModel back = load_model(buf);
  CHECK(back == m);
  CHECK(back.n_state_dims() == 3);

  std::stringstream bad("NOTMAGIC0000");
  CHECK_THROWS_AS(load_model(bad), PreconditionError);
}

TEST_CASE("invalid construction and indices are rejected") {
  CHECK_THROWS_AS(CpModel({}, 1, 0), PreconditionError);
  CHECK_THROWS_AS(CpModel({3, 0}, 1, 1), PreconditionError);
  CHECK_THROWS_AS(CpModel({3, 3}, 0, 1), PreconditionError);
  CHECK_THROWS_AS(CpModel({3, 3}, 2, 2), PreconditionError);  // no action mode
  const CpModel m({3, 4}, 2, 1);
  CHECK_THROWS_AS(evaluate_q(m, {0, 1}), PreconditionError);
  CHECK_THROWS_AS(evaluate_q(m, {4, 1}), PreconditionError);
  CHECK_THROWS_AS(evaluate_q(m, {1, 5}), PreconditionError);
  CHECK_THROWS_AS(evaluate_q(m, {1}), PreconditionError);
  CHECK_THROWS_AS(max_q_over_actions(m, {1, 1}), PreconditionError);
  CHECK_THROWS_AS(init_model({3, 3}, 2, 1, 0, -1.0), PreconditionError);
}
