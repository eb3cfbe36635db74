#pragma once

#include <memory>
#include <string>

#include "mstd/mdp.hpp"

namespace mstd {

/// Chain of `length` states, actions {0: left, 1: right}. The chosen move
/// succeeds with probability 1-slip_prob and goes the opposite way
/// otherwise; walking off the left end stays in place. Entering the
/// rightmost state pays right_reward and terminates (that state is absorbing
/// with zero reward); every other move pays step_reward.
struct ChainSpec {
  int length = 5;
  double slip_prob = 0.0;
  double right_reward = 1.0;
  double step_reward = 0.0;
  double discount = 0.9;
};

FiniteMdp make_chain(const ChainSpec& spec);

/// Torque-limited pendulum swing-up. theta = 0 is upright, observations are
/// (cos theta, sin theta, omega). Reward is -(theta_bar^2 + 0.1 omega^2 +
/// 0.001 a^2) evaluated at the pre-step state, with theta_bar wrapped into
/// (-pi, pi]. Episodes never terminate; the harness truncates at
/// max_episode_steps.
struct PendulumSpec {
  double gravity = 10.0;
  double mass = 1.0;
  double rod_length = 1.0;
  double dt = 0.05;
  double torque_bound = 2.0;
  double omega_clamp = 8.0;
  int max_episode_steps = 200;
  // Episodes start anywhere on the circle with a small spin:
  // theta ~ U[-pi, pi], omega ~ U[-1, 1].
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

/// Semi-implicit Euler update on the (theta, omega) pair:
///   omega' = clamp(omega + (1.5 g/l sin(theta) + 3 a/(m l^2)) dt)
///   theta' = theta + omega' dt
void pendulum_dynamics(const PendulumSpec& spec, double& theta, double& omega,
                       double torque);

/// One step from an observation vector (cos theta, sin theta, omega).
/// Throws ContractError if the torque is outside the bound.
Transition pendulum_step(const StateVec& state, double torque,
                         const PendulumSpec& spec = {});

class PendulumEnv final : public Env {
 public:
  explicit PendulumEnv(PendulumSpec spec = {}) : spec_(spec) {}

  StateVec reset(std::uint64_t seed) override;
  Transition step(const ActionVec& action) override;
  int obs_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  ActionVec action_low() const override { return {-spec_.torque_bound}; }
  ActionVec action_high() const override { return {spec_.torque_bound}; }
  double reward_bound() const override;
  int max_episode_steps() const override { return spec_.max_episode_steps; }
  std::unique_ptr<Env> clone() const override;

 private:
  StateVec observe() const;

  PendulumSpec spec_;
  double theta_ = 0.0;
  double omega_ = 0.0;
  bool ready_ = false;
};

/// Builds an environment by name: "pendulum", or "chain" with the default
/// ChainSpec. Throws ConfigError for unknown names.
std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace mstd
