#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace teql {

using Rng = std::mt19937_64;

/// One physics transition.
struct PhysicsStep {
  std::vector<double> next_state;
  double reward = 0.0;
  bool terminated = false;  // failure condition, not the step cap
};

namespace pendulum {
inline constexpr double kDt = 0.05;
inline constexpr double kGravity = 10.0;
inline constexpr double kMass = 1.0;
inline constexpr double kLength = 1.0;
inline constexpr double kMaxSpeed = 8.0;
inline constexpr double kMaxTorque = 2.0;
/// Largest per-step cost: pi^2 + 0.1 * 8^2 + 0.001 * 2^2.
double max_step_cost();
/// Wraps an angle into [-pi, pi).
double wrap_angle(double theta);
}  // namespace pendulum

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kForceScale = 10.0;
inline constexpr double kDt = 0.02;
inline constexpr double kXThreshold = 2.4;
/// 12 degrees in radians.
inline constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
}  // namespace cartpole

/// Semi-implicit Euler pendulum step from state (theta, theta_dot); theta = 0
/// is upright. Reward is the negated cost of the pre-step state and torque.
PhysicsStep pendulum_step(std::span<const double> state, double torque);

/// Euler cart-pole step from (x, x_dot, theta, theta_dot) with force 10 a.
/// Reward is 1 on non-terminal steps and 0 on the failing step.
PhysicsStep cartpole_step(std::span<const double> state, double a);

/// Result of an episodic environment step.
struct EnvStep {
  std::vector<double> next_state;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;  // step cap reached

  bool done() const { return terminated || truncated; }
};

/// Episodic wrapper that owns the continuous state and step counter.
class Environment {
 public:
  explicit Environment(int max_steps);
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t state_dim() const = 0;
  /// Bound on |r| per step.
  virtual double reward_bound() const = 0;
  /// Worst achievable episode return over max_steps steps.
  virtual double min_episode_return() const = 0;

  const std::vector<double>& reset(Rng& rng);
  EnvStep step(std::span<const double> action);

  const std::vector<double>& state() const noexcept { return state_; }
  int steps() const noexcept { return steps_; }
  int max_steps() const noexcept { return max_steps_; }
  bool done() const noexcept { return done_; }

  /// Overwrite the current state; resets the step counter.
  void set_state(std::vector<double> state);

 protected:
  virtual std::vector<double> sample_initial_state(Rng& rng) const = 0;
  virtual PhysicsStep physics(std::span<const double> state,
                              std::span<const double> action) const = 0;

 private:
  std::vector<double> state_;
  int steps_ = 0;
  int max_steps_;
  bool done_ = false;
};

class PendulumEnv final : public Environment {
 public:
  explicit PendulumEnv(int max_steps = 100) : Environment(max_steps) {}
  std::string name() const override { return "pendulum"; }
  std::size_t state_dim() const override { return 2; }
  double reward_bound() const override { return pendulum::max_step_cost(); }
  double min_episode_return() const override;

 protected:
  std::vector<double> sample_initial_state(Rng& rng) const override;
  PhysicsStep physics(std::span<const double> state,
                      std::span<const double> action) const override;
};

class CartPoleEnv final : public Environment {
 public:
  explicit CartPoleEnv(int max_steps = 100) : Environment(max_steps) {}
  std::string name() const override { return "cartpole"; }
  std::size_t state_dim() const override { return 4; }
  double reward_bound() const override { return 1.0; }
  double min_episode_return() const override { return 0.0; }

 protected:
  std::vector<double> sample_initial_state(Rng& rng) const override;
  PhysicsStep physics(std::span<const double> state,
                      std::span<const double> action) const override;
};

/// Creates "pendulum" or "cartpole".
std::unique_ptr<Environment> make_environment(const std::string& id, int max_steps);

/// Finite MDP <S, A, P, R, gamma> with row-major tables:
/// P[(s * A + a) * S + s'] and R[s * A + a].
struct SyntheticMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward;
  double gamma = 0.9;

  double p(int s, int a, int next) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + next];
  }
  double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
  double reward_bound() const;

  /// Throws PreconditionError unless every P row is a distribution and gamma in (0, 1).
  void validate() const;
  /// Samples s' ~ P(. | s, a).
  int sample_next(int s, int a, Rng& rng) const;
};

/// Dirichlet(1, ..., 1) transition rows, U[0, 1] rewards, seeded.
SyntheticMdp generate_synthetic_mdp(int n_states, int n_actions, double gamma,
                                    std::uint64_t seed);

/// Value iteration on the Bellman optimality equation until the sup-norm
/// change drops below `tolerance`. Returns Q*[s * A + a].
std::vector<double> synthetic_q_star(const SyntheticMdp& mdp, double tolerance = 1e-10);

/// max_{s,a} |Q(s,a) - (R(s,a) + gamma * sum_s' P(s'|s,a) max_a' Q(s',a'))|.
double bellman_residual(const SyntheticMdp& mdp, std::span<const double> q);

}  // namespace teql
