#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mstd/mdp.hpp"
#include "mstd/mlp.hpp"
#include "mstd/qtable.hpp"
#include "mstd/replay_buffer.hpp"
#include "mstd/td_targets.hpp"

namespace mstd {

enum class Algo { Ddpg, MpDdpg, MsDdpg, Sac, MpSac, MsSac };

bool is_sac_family(Algo algo);
TargetKind target_kind(Algo algo);
/// "ddpg", "mpddpg", "msddpg", "sac", "mpsac", "mssac"; ConfigError otherwise.
Algo parse_algo(const std::string& name);
std::string algo_name(Algo algo);

struct AgentConfig {
  Algo algo = Algo::Ddpg;
  ActionMode action_mode = ActionMode::Loaded;
  int window = 1;  // L
  double discount = 0.99;
  double tau = 0.005;
  int batch_size = 128;
  double lr = 0.0;     // 0 picks the family default (0.0003 DDPG, 0.0004 SAC)
  double alpha = 0.12; // SAC entropy coefficient
  double ou_mu = 0.0;
  double ou_theta = 0.2;
  double ou_sigma = 0.3;
  int hidden = 256;
  std::size_t buffer_capacity = 100000;
  int warmup = 0;      // buffer size before updates start; 0 = batch_size
};

void validate_agent_config(const AgentConfig& config);
double effective_lr(const AgentConfig& config);
int effective_warmup(const AgentConfig& config);
TargetSpec make_target_spec(const AgentConfig& config);

struct TrainResult {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  bool updated = false;  // false = skipped (buffer below the warmup guard)
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual const AgentConfig& config() const = 0;

  /// Policy action for one state. explore adds OU noise (eventually clipped
  /// to bounds) for the deterministic family and draws from the squashed
  /// Gaussian for the stochastic one; explore=false is the noise-free
  /// evaluation action and consumes no randomness.
  virtual ActionVec act(const StateVec& state, bool explore,
                        std::mt19937_64& gen) = 0;

  /// One gradient update per call: minibatch, critic step, actor step, soft
  /// target updates. No-op while the buffer is below the warmup guard.
  virtual TrainResult train_step(const RingBuffer& buffer,
                                 std::mt19937_64& gen) = 0;

  /// Resets episodic exploration state (the OU process).
  virtual void begin_episode() = 0;

  virtual std::uint64_t train_steps() const = 0;

  /// Writes one checkpoint file per network as <prefix><name>.ckpt and
  /// returns the paths, in a fixed order.
  virtual std::vector<std::string> save(const std::string& prefix) const = 0;
};

/// Builds the configured agent for the environment's dimensions and bounds.
/// Action bounds must be symmetric per dimension. All weight init derives
/// from the seed.
std::unique_ptr<Agent> make_agent(const AgentConfig& config, const Env& env,
                                  std::uint64_t seed);

/// Bootstrap targets for a DDPG-family minibatch. Horizon evaluations use
/// the target critic; actions at intermediate states come from the stored
/// data (Loaded) or the target actor (Generated), the final horizon always
/// from the target actor.
Eigen::VectorXd ddpg_targets(const std::vector<MultiStateSample>& batch,
                             const Mlp& target_actor, const Mlp& target_critic,
                             const TargetSpec& spec);

/// Bootstrap targets for a SAC-family minibatch: min over the twin target
/// critics, actor-sampled actions where the mode requires them, entropy
/// folded into the final term (Loaded) or every term (Generated).
Eigen::VectorXd sac_targets(const std::vector<MultiStateSample>& batch,
                            const Mlp& actor, const SquashedGaussianHead& head,
                            const Mlp& target_q1, const Mlp& target_q2,
                            const TargetSpec& spec, double alpha,
                            std::mt19937_64& gen);

/// Mean-squared TD loss of critic(obs, act) against fixed targets; analytic
/// parameter gradients are accumulated into grads (pass empty to skip).
double critic_loss_and_grads(const Mlp& critic, const Eigen::MatrixXd& obs,
                             const Eigen::MatrixXd& act,
                             const Eigen::VectorXd& targets,
                             std::span<double> grads);

/// Deterministic-actor loss -mean Q(s, actor(s)) with gradients through the
/// frozen critic into the actor parameters.
double ddpg_actor_loss_and_grads(const Mlp& actor, const Mlp& critic,
                                 const Eigen::MatrixXd& obs,
                                 std::span<double> actor_grads);

/// Stochastic-actor loss mean(alpha log pi - min(q1, q2)) at reparameterized
/// actions with fixed noise xi; gradients flow through the frozen critics
/// and the squashing into the actor parameters.
double sac_actor_loss_and_grads(const Mlp& actor,
                                const SquashedGaussianHead& head,
                                const Mlp& q1, const Mlp& q2,
                                const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& xi, double alpha,
                                std::span<double> actor_grads);

struct MetricsRow {
  long step = 0;
  long episode = 0;
  double episode_return = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  long wall_ms = 0;
};

struct TrainRunOptions {
  long total_steps = 30000;
  int eval_every = 1000;
  int eval_episodes = 5;
  std::uint64_t seed = 1;
};

struct TrainRunResult {
  /// One row per episode; losses are that episode's per-update means.
  std::vector<MetricsRow> train_rows;
  /// One row per noise-free evaluation episode, at eval_every boundaries.
  std::vector<MetricsRow> eval_rows;
};

/// Full training loop: exploration, window maintenance with termination
/// padding, one train step per env step, periodic evaluation on a cloned
/// environment. Deterministic given (config, seed) apart from wall_ms.
TrainRunResult run_training(Agent& agent, Env& env, const TrainRunOptions& opts);

}  // namespace mstd
