#include "teql/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "teql/error.hpp"

namespace teql {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw PreconditionError(std::string(what) + ": non-finite state");
}

}  // namespace

namespace pendulum {

double max_step_cost() {
  constexpr double pi = std::numbers::pi;
  return pi * pi + 0.1 * kMaxSpeed * kMaxSpeed + 0.001 * kMaxTorque * kMaxTorque;
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(theta + std::numbers::pi, two_pi);
  if (wrapped < 0.0) wrapped += two_pi;
  return wrapped - std::numbers::pi;
}

}  // namespace pendulum

PhysicsStep pendulum_step(std::span<const double> state, double torque) {
  using namespace pendulum;
  if (state.size() != 2) throw PreconditionError("pendulum_step: state must be (theta, theta_dot)");
  require_finite(state, "pendulum_step");
  if (std::isnan(torque)) throw PreconditionError("pendulum_step: NaN torque");

  const double theta = state[0];
  const double theta_dot = state[1];
  const double u = std::clamp(torque, -kMaxTorque, kMaxTorque);
  const double angle = wrap_angle(theta);
  const double cost = angle * angle + 0.1 * theta_dot * theta_dot + 0.001 * u * u;

  double next_dot = theta_dot + (3.0 * kGravity / (2.0 * kLength) * std::sin(theta) +
                                 3.0 / (kMass * kLength * kLength) * u) * kDt;
  next_dot = std::clamp(next_dot, -kMaxSpeed, kMaxSpeed);
  const double next_theta = wrap_angle(theta + next_dot * kDt);
  return {{next_theta, next_dot}, -cost, false};
}

PhysicsStep cartpole_step(std::span<const double> state, double a) {
  using namespace cartpole;
  if (state.size() != 4) throw PreconditionError("cartpole_step: state must have 4 components");
  require_finite(state, "cartpole_step");
  if (std::isnan(a)) throw PreconditionError("cartpole_step: NaN action");

  const double x = state[0];
  const double x_dot = state[1];
  const double theta = state[2];
  const double theta_dot = state[3];

  const double force = kForceScale * std::clamp(a, -1.0, 1.0);
  const double total_mass = kCartMass + kPoleMass;
  const double pole_mass_length = kPoleMass * kHalfLength;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);

  const double temp = (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  std::vector<double> next = {x + kDt * x_dot, x_dot + kDt * x_acc, theta + kDt * theta_dot,
                              theta_dot + kDt * theta_acc};
  const bool failed = next[0] < -kXThreshold || next[0] > kXThreshold ||
                      next[2] < -kThetaThreshold || next[2] > kThetaThreshold;
  return {std::move(next), failed ? 0.0 : 1.0, failed};
}

Environment::Environment(int max_steps) : max_steps_(max_steps) {
  if (max_steps < 1) throw PreconditionError("Environment: max_steps must be >= 1");
}

const std::vector<double>& Environment::reset(Rng& rng) {
  state_ = sample_initial_state(rng);
  steps_ = 0;
  done_ = false;
  return state_;
}

void Environment::set_state(std::vector<double> state) {
  if (state.size() != state_dim()) throw PreconditionError("set_state: wrong dimension");
  state_ = std::move(state);
  steps_ = 0;
  done_ = false;
}

EnvStep Environment::step(std::span<const double> action) {
  if (done_) throw PreconditionError("Environment::step after episode end; call reset()");
  if (state_.size() != state_dim()) throw PreconditionError("Environment::step before reset()");
  PhysicsStep ps = physics(state_, action);
  ++steps_;
  EnvStep out;
  out.reward = ps.reward;
  out.terminated = ps.terminated;
  out.truncated = !ps.terminated && steps_ >= max_steps_;
  out.next_state = ps.next_state;
  state_ = std::move(ps.next_state);
  done_ = out.done();
  return out;
}

double PendulumEnv::min_episode_return() const {
  return -static_cast<double>(max_steps()) * pendulum::max_step_cost();
}

std::vector<double> PendulumEnv::sample_initial_state(Rng& rng) const {
  std::uniform_real_distribution<double> theta(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  const double t = theta(rng);
  return {t, speed(rng)};
}

PhysicsStep PendulumEnv::physics(std::span<const double> state,
                                 std::span<const double> action) const {
  if (action.size() != 1) throw PreconditionError("pendulum: action must be scalar torque");
  return pendulum_step(state, action[0]);
}

std::vector<double> CartPoleEnv::sample_initial_state(Rng& rng) const {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  std::vector<double> s(4);
  for (double& v : s) v = dist(rng);
  return s;
}

PhysicsStep CartPoleEnv::physics(std::span<const double> state,
                                 std::span<const double> action) const {
  if (action.size() != 1) throw PreconditionError("cartpole: action must be scalar");
  return cartpole_step(state, action[0]);
}

std::unique_ptr<Environment> make_environment(const std::string& id, int max_steps) {
  if (id == "pendulum") return std::make_unique<PendulumEnv>(max_steps);
  if (id == "cartpole") return std::make_unique<CartPoleEnv>(max_steps);
  throw PreconditionError("unknown environment '" + id + "'");
}

double SyntheticMdp::reward_bound() const {
  double bound = 0.0;
  for (double v : reward) bound = std::max(bound, std::abs(v));
  return bound;
}

void SyntheticMdp::validate() const {
  if (n_states < 1 || n_actions < 1) throw PreconditionError("SyntheticMdp: empty state/action set");
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("SyntheticMdp: gamma must be in (0, 1)");
  const auto S = static_cast<std::size_t>(n_states);
  const auto A = static_cast<std::size_t>(n_actions);
  if (transition.size() != S * A * S || reward.size() != S * A)
    throw PreconditionError("SyntheticMdp: table sizes do not match (S, A)");
  for (std::size_t row = 0; row < S * A; ++row) {
    double sum = 0.0;
    for (std::size_t k = 0; k < S; ++k) {
      const double v = transition[row * S + k];
      if (!(v >= 0.0)) throw PreconditionError("SyntheticMdp: negative transition probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw PreconditionError("SyntheticMdp: transition row does not sum to 1");
  }
}

int SyntheticMdp::sample_next(int s, int a, Rng& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  double acc = 0.0;
  for (int k = 0; k < n_states; ++k) {
    acc += p(s, a, k);
    if (u < acc) return k;
  }
  return n_states - 1;
}

SyntheticMdp generate_synthetic_mdp(int n_states, int n_actions, double gamma,
                                    std::uint64_t seed) {
  SyntheticMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  if (n_states < 1 || n_actions < 1) throw PreconditionError("generate_synthetic_mdp: empty MDP");
  Rng rng(seed);
  // Dirichlet(1,...,1) rows are normalized Exp(1) draws.
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto S = static_cast<std::size_t>(n_states);
  const auto A = static_cast<std::size_t>(n_actions);
  mdp.transition.resize(S * A * S);
  mdp.reward.resize(S * A);
  for (std::size_t row = 0; row < S * A; ++row) {
    double sum = 0.0;
    for (std::size_t k = 0; k < S; ++k) sum += mdp.transition[row * S + k] = expo(rng);
    for (std::size_t k = 0; k < S; ++k) mdp.transition[row * S + k] /= sum;
  }
  for (double& r : mdp.reward) r = u01(rng);
  mdp.validate();
  return mdp;
}

namespace {

std::vector<double> bellman_backup(const SyntheticMdp& mdp, std::span<const double> q) {
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  std::vector<double> v(S);
  for (std::size_t s = 0; s < S; ++s)
    v[s] = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(s * A),
                             q.begin() + static_cast<std::ptrdiff_t>((s + 1) * A));
  std::vector<double> next(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double expected = 0.0;
      for (std::size_t k = 0; k < S; ++k) expected += mdp.transition[(s * A + a) * S + k] * v[k];
      next[s * A + a] = mdp.reward[s * A + a] + mdp.gamma * expected;
    }
  }
  return next;
}

}  // namespace

std::vector<double> synthetic_q_star(const SyntheticMdp& mdp, double tolerance) {
  mdp.validate();
  std::vector<double> q(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
  for (int iter = 0; iter < 100000; ++iter) {
    std::vector<double> next = bellman_backup(mdp, q);
    double change = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) change = std::max(change, std::abs(next[k] - q[k]));
    q = std::move(next);
    if (change < tolerance) break;
  }
  return q;
}

double bellman_residual(const SyntheticMdp& mdp, std::span<const double> q) {
  const std::vector<double> backed = bellman_backup(mdp, q);
  double residual = 0.0;
  for (std::size_t k = 0; k < backed.size(); ++k)
    residual = std::max(residual, std::abs(backed[k] - q[k]));
  return residual;
}

}  // namespace teql
