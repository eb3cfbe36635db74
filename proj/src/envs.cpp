#include "mstd/envs.hpp"

#include <algorithm>
#include <cmath>

#include "mstd/rng.hpp"

namespace mstd {

FiniteMdp make_chain(const ChainSpec& spec) {
  if (spec.length < 2) throw ContractError("make_chain: length must be at least 2");
  if (!(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0))
    throw ContractError("make_chain: slip_prob must lie in [0,1)");
  if (!(spec.discount > 0.0 && spec.discount < 1.0))
    throw ContractError("make_chain: discount must lie in (0,1)");

  const int n = spec.length;
  const int goal = n - 1;
  FiniteMdp mdp = FiniteMdp::zeros(n, 2, spec.discount);
  mdp.reward_bound = std::max({std::fabs(spec.right_reward),
                               std::fabs(spec.step_reward), 0.0});
  mdp.terminal_states = {goal};

  auto reward_into = [&](int s2) {
    return s2 == goal ? spec.right_reward : spec.step_reward;
  };

  for (int s = 0; s < goal; ++s) {
    for (int a = 0; a < 2; ++a) {
      int intended = std::clamp(s + (a == 1 ? 1 : -1), 0, goal);
      int slipped = std::clamp(s + (a == 1 ? -1 : 1), 0, goal);
      // += so coincident targets (left edge) merge into one entry.
      mdp.p(s, a, intended) += 1.0 - spec.slip_prob;
      mdp.p(s, a, slipped) += spec.slip_prob;
      mdp.r(s, a, intended) = reward_into(intended);
      mdp.r(s, a, slipped) = reward_into(slipped);
    }
  }
  // Absorbing goal, zero reward.
  for (int a = 0; a < 2; ++a) mdp.p(goal, a, goal) = 1.0;
  return mdp;
}

double wrap_angle(double theta) {
  double y = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (y <= 0.0) y += 2.0 * M_PI;
  return y - M_PI;
}

void pendulum_dynamics(const PendulumSpec& spec, double& theta, double& omega,
                       double torque) {
  const double g = spec.gravity, m = spec.mass, l = spec.rod_length;
  omega += (1.5 * g / l * std::sin(theta) + 3.0 * torque / (m * l * l)) * spec.dt;
  omega = std::clamp(omega, -spec.omega_clamp, spec.omega_clamp);
  theta += omega * spec.dt;
}

static double pendulum_reward(const PendulumSpec&, double theta, double omega,
                              double torque) {
  double tb = wrap_angle(theta);
  return -(tb * tb + 0.1 * omega * omega + 0.001 * torque * torque);
}

static StateVec pendulum_obs(double theta, double omega) {
  return {std::cos(theta), std::sin(theta), omega};
}

Transition pendulum_step(const StateVec& state, double torque,
                         const PendulumSpec& spec) {
  if (state.size() != 3)
    throw ContractError("pendulum_step: state must be (cos, sin, omega)");
  if (!(std::fabs(torque) <= spec.torque_bound))
    throw ContractError("pendulum_step: torque outside bound");
  double theta = std::atan2(state[1], state[0]);
  double omega = state[2];

  Transition t;
  t.state = state;
  t.action = {torque};
  t.reward = pendulum_reward(spec, theta, omega, torque);
  pendulum_dynamics(spec, theta, omega, torque);
  t.next_state = pendulum_obs(theta, omega);
  t.terminated = false;
  return t;
}

StateVec PendulumEnv::reset(std::uint64_t seed) {
  std::mt19937_64 gen(derive_seed(seed, "env"));
  theta_ = uniform_range(gen, -M_PI, M_PI);
  omega_ = uniform_range(gen, -1.0, 1.0);
  ready_ = true;
  return observe();
}

Transition PendulumEnv::step(const ActionVec& action) {
  if (!ready_) throw ContractError("PendulumEnv::step before reset");
  if (action.size() != 1)
    throw ContractError("PendulumEnv::step: action must have one entry");
  double torque = action[0];
  if (!(std::fabs(torque) <= spec_.torque_bound))
    throw ContractError("PendulumEnv::step: torque outside bound");

  Transition t;
  t.state = observe();
  t.action = action;
  t.reward = pendulum_reward(spec_, theta_, omega_, torque);
  pendulum_dynamics(spec_, theta_, omega_, torque);
  t.next_state = observe();
  t.terminated = false;
  return t;
}

double PendulumEnv::reward_bound() const {
  double w = spec_.omega_clamp, a = spec_.torque_bound;
  return M_PI * M_PI + 0.1 * w * w + 0.001 * a * a;
}

std::unique_ptr<Env> PendulumEnv::clone() const {
  return std::make_unique<PendulumEnv>(*this);
}

StateVec PendulumEnv::observe() const { return pendulum_obs(theta_, omega_); }

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "chain")
    return std::make_unique<FiniteMdpEnv>(make_chain(ChainSpec{}));
  throw ConfigError("unknown environment: " + name);
}

}  // namespace mstd
