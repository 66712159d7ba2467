#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "teql/discretization.hpp"
#include "teql/error.hpp"

using namespace teql;

namespace {

// Index = 1 + number of interior edges lo + k (hi - lo) / (d - 1), k = 1..d-1,
// at or below x. Found by binary search over the explicit edge list.
int edge_search_index(double x, const DimSpec& dim) {
  std::vector<double> edges;
  for (int k = 1; k < dim.bins; ++k)
    edges.push_back(dim.lo + static_cast<double>(k) * (dim.hi - dim.lo) / (dim.bins - 1));
  edges.back() = dim.hi;  // the top edge is hi itself, not its rounded reconstruction
  const double c = std::clamp(x, dim.lo, dim.hi);
  const auto above = std::upper_bound(edges.begin(), edges.end(), c);
  return 1 + static_cast<int>(above - edges.begin());
}

double distance_to_edge(double x, const DimSpec& dim) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim.bins; ++k)
    best = std::min(best, std::abs(x - (dim.lo + k * (dim.hi - dim.lo) / (dim.bins - 1))));
  return best;
}

}  // namespace

TEST_CASE("discretize_component agrees with a bin-edge search") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double lo = -10 * u(rng);
    const DimSpec dim{lo, lo + 0.1 + 20 * u(rng), 2 + trial % 40};
    for (int k = 0; k < 50; ++k) {
      const double x = dim.lo - 1.0 + (dim.hi - dim.lo + 2.0) * u(rng);
      if (distance_to_edge(x, dim) < 1e-7 * (dim.hi - dim.lo)) continue;
      CHECK(discretize_component(x, dim) == edge_search_index(x, dim));
      ++compared;
    }
  }
  CHECK(compared > 9000);
}

TEST_CASE("range endpoints map to the first and last index") {
  const DimSpec dim{-2.0, 2.0, 10};
  CHECK(discretize_component(-2.0, dim) == 1);
  CHECK(discretize_component(2.0, dim) == 10);
  CHECK(discretize_component(-50.0, dim) == 1);
  CHECK(discretize_component(50.0, dim) == 10);
  CHECK(discretize_component(-std::numeric_limits<double>::infinity(), dim) == 1);
  CHECK(discretize_component(std::numeric_limits<double>::infinity(), dim) == 10);
}

TEST_CASE("property: discretization is monotone and stays in range") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-6, 6);
  const DimSpec dim{-std::numbers::pi, std::numbers::pi, 17};
  for (int k = 0; k < 5000; ++k) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const int ia = discretize_component(a, dim), ib = discretize_component(b, dim);
    CHECK(ia <= ib);
    CHECK(ia >= 1);
    CHECK(ib <= dim.bins);
  }
}

TEST_CASE("action grid nodes map back onto their own index") {
  for (int bins = 2; bins <= 60; ++bins) {
    for (const DimSpec dim : {DimSpec{-2.0, 2.0, bins}, DimSpec{-1.0, 1.0, bins},
                              DimSpec{-0.418, 0.418, bins}, DimSpec{0.3, 7.1, bins}}) {
      for (int j = 1; j <= bins; ++j) CHECK(discretize_component(action_value_of_index(j, dim), dim) == j);
    }
  }
  const DimSpec torque{-2.0, 2.0, 10};
  CHECK(action_value_of_index(1, torque) == -2.0);
  CHECK(action_value_of_index(10, torque) == 2.0);
  CHECK(action_value_of_index(4, torque) == doctest::Approx(-2.0 + 3.0 * 4.0 / 9.0));
}

TEST_CASE("state-action tuple lists state dims before action dims") {
  const DiscretizationSpec spec = presets::pendulum();
  const std::vector<double> s = {0.0, 8.0};
  const std::vector<double> a = {-2.0};
  const IndexTuple idx = discretize_state_action(s, a, spec);
  CHECK(idx.size() == 3);
  CHECK(idx[0] == discretize_component(0.0, spec.state[0]));
  CHECK(idx[1] == 20);
  CHECK(idx[2] == 1);
  CHECK(discretize_state(s, spec) == IndexTuple{idx[0], idx[1]});
  const auto av = action_vector(IndexTuple{10}, spec);
  CHECK(av == std::vector<double>{2.0});
}

TEST_CASE("granularity presets have the documented bin counts") {
  const std::vector<std::size_t> pendulum_pairs = {256, 1800, 4000, 13500, 32000};
  const std::vector<std::size_t> cartpole_pairs = {6400, 115200, 400000, 3037500, 12800000};
  const auto p = presets::pendulum_granularities();
  const auto c = presets::cartpole_granularities();
  REQUIRE(p.size() == 5);
  REQUIRE(c.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(p[k].spec.total_pairs() == pendulum_pairs[k]);
    CHECK(c[k].spec.total_pairs() == cartpole_pairs[k]);
    CHECK(p[k].name == c[k].name);
  }
  CHECK(p[2].name == "median");
  CHECK(p[2].spec == presets::pendulum());
  CHECK(c[2].spec == presets::cartpole());
  CHECK(presets::cartpole().tensor_dims() == std::vector<int>{10, 10, 20, 20, 10});
}

TEST_CASE("invalid input is rejected") {
  const DimSpec dim{-1.0, 1.0, 5};
  CHECK_THROWS_AS(discretize_component(std::nan(""), dim), PreconditionError);
  CHECK_THROWS_AS(action_value_of_index(0, dim), PreconditionError);
  CHECK_THROWS_AS(action_value_of_index(6, dim), PreconditionError);
  CHECK_THROWS_AS((DimSpec{1.0, 1.0, 5}.validate()), PreconditionError);
  CHECK_THROWS_AS((DimSpec{0.0, 1.0, 1}.validate()), PreconditionError);
  const DiscretizationSpec spec = presets::pendulum();
  const std::vector<double> wrong = {0.0};
  CHECK_THROWS_AS(discretize_state(wrong, spec), PreconditionError);
  CHECK_THROWS_AS(action_vector(IndexTuple{1, 1}, spec), PreconditionError);
  CHECK_THROWS_AS((DiscretizationSpec{{dim}, {}}.validate()), PreconditionError);
}
