#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mstd/errors.hpp"

namespace mstd {

// States and actions are flat real vectors. Finite MDPs use a single entry
// holding the integer index.
using StateVec = std::vector<double>;
using ActionVec = std::vector<double>;

struct Transition {
  StateVec state;
  ActionVec action;
  double reward = 0.0;
  StateVec next_state;
  bool terminated = false;
};

/// Tabular MDP with dense P[s][a][s'] and R[s][a][s'] tensors, stored
/// flattened in s-major order.
struct FiniteMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> trans_prob;   // num_states * num_actions * num_states
  std::vector<double> reward;       // same layout
  double discount = 0.0;
  std::vector<int> terminal_states; // sorted, unique
  double reward_bound = 0.0;        // declared bound on |reward| entries

  std::size_t idx(int s, int a, int s2) const {
    return (static_cast<std::size_t>(s) * num_actions + a) * num_states + s2;
  }
  double p(int s, int a, int s2) const { return trans_prob[idx(s, a, s2)]; }
  double& p(int s, int a, int s2) { return trans_prob[idx(s, a, s2)]; }
  double r(int s, int a, int s2) const { return reward[idx(s, a, s2)]; }
  double& r(int s, int a, int s2) { return reward[idx(s, a, s2)]; }
  bool is_terminal(int s) const;

  /// Zero-filled tensors of the right shape; caller fills in entries.
  static FiniteMdp zeros(int num_states, int num_actions, double discount);
};

struct EpisodeReturn {
  double value = 0.0;
  double discount_used = 1.0;
};

/// Checks every FiniteMdp invariant and returns one human-readable string
/// per violation. An empty result means the MDP is well formed.
std::vector<std::string> validate_mdp(const FiniteMdp& mdp);

/// Discounted sum of rewards, t starting at 0. Empty input gives 0.
/// Discount may be 1 here (undiscounted episode scores); everywhere else in
/// the library it must be strictly below 1.
EpisodeReturn episode_return(const std::vector<double>& rewards, double discount);

/// Text format round trip. Throws ConfigError on malformed input or if the
/// loaded MDP fails validation.
FiniteMdp load_mdp(const std::string& path);
void save_mdp(const FiniteMdp& mdp, const std::string& path);
FiniteMdp parse_mdp(std::istream& in, const std::string& origin);
void write_mdp(const FiniteMdp& mdp, std::ostream& out);

/// Environment interface shared by the agents and the training harness.
/// One instance is single-threaded; clones are fully independent.
class Env {
 public:
  virtual ~Env() = default;

  /// Starts a new episode. Deterministic given the seed.
  virtual StateVec reset(std::uint64_t seed) = 0;

  /// Advances one step. Throws ContractError if called before reset or with
  /// an out-of-bounds action.
  virtual Transition step(const ActionVec& action) = 0;

  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual ActionVec action_low() const = 0;
  virtual ActionVec action_high() const = 0;
  virtual double reward_bound() const = 0;

  /// Step cap per episode; the harness truncates (without terminated=true)
  /// when it is reached. 0 means uncapped.
  virtual int max_episode_steps() const = 0;

  virtual std::unique_ptr<Env> clone() const = 0;
};

/// Env view of a FiniteMdp: observation and action are 1-entry index
/// vectors, episodes start from a fixed initial state and transitions are
/// sampled from the P tensor.
class FiniteMdpEnv final : public Env {
 public:
  explicit FiniteMdpEnv(FiniteMdp mdp, int initial_state = 0);

  StateVec reset(std::uint64_t seed) override;
  Transition step(const ActionVec& action) override;
  int obs_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  ActionVec action_low() const override { return {0.0}; }
  ActionVec action_high() const override {
    return {static_cast<double>(mdp_.num_actions - 1)};
  }
  double reward_bound() const override { return mdp_.reward_bound; }
  int max_episode_steps() const override { return 0; }
  std::unique_ptr<Env> clone() const override;

  const FiniteMdp& mdp() const { return mdp_; }

 private:
  FiniteMdp mdp_;
  int initial_state_;
  int state_ = -1;  // -1 until reset
  std::mt19937_64 gen_;
};

}  // namespace mstd
