#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "mstd/errors.hpp"

namespace mstd {

enum class TargetKind { SingleStep, MultiStep, MultiState };
enum class ActionMode { Loaded, Generated };

/// Which bootstrap target a critic trains against. SingleStep is the plain
/// one-step TD target, MultiStep bootstraps once at horizon L, MultiState
/// averages the targets of every horizon 1..L.
struct TargetSpec {
  TargetKind kind = TargetKind::SingleStep;
  int window = 1;  // L
  ActionMode action_mode = ActionMode::Loaded;
  std::optional<double> soft_alpha;  // entropy weight; absent = hard targets
  double discount = 0.99;
};

/// Throws ContractError if the spec violates its invariants.
void validate_target_spec(const TargetSpec& spec);

/// A Q-value evaluation, with the matching log-policy density when the
/// actor is stochastic.
struct QEval {
  double value = 0.0;
  std::optional<double> log_prob;
};

/// r + discount * q_next, with the bootstrap zeroed on terminal states.
double single_step_target(double r, const QEval& q_next, double discount,
                          bool terminal);

/// Truncated L-step target: sum of discounted rewards with padded entries
/// zeroed, plus the horizon-L bootstrap unless terminal_flag is set.
double multi_step_target(std::span<const double> rewards,
                         std::span<const std::uint8_t> pad_flags,
                         const QEval& q_horizon, double discount,
                         bool terminal_flag);

/// Arithmetic mean of the multi_step_target values at horizons 1..L.
/// q_values[l-1] is the bootstrap evaluation for horizon l; a padded triplet
/// zeroes the bootstrap at its state, terminal_flag zeroes the last one.
double mstd_target(std::span<const double> rewards,
                   std::span<const std::uint8_t> pad_flags,
                   std::span<const QEval> q_values, double discount,
                   bool terminal_flag);

/// Q-average of the action-loaded mode: stored actions at the intermediate
/// states, the actor's action only at the final state.
/// (1/L) [ sum_{l=1..L-1} discount^l q_loaded[l-1] + discount^L q_final ].
double q_average_loaded(std::span<const QEval> q_loaded, const QEval& q_final,
                        double discount, int window);

/// Q-average of the action-generated mode: the actor's action at every
/// state. (1/L) sum_{l=1..L} discount^l q_gen[l-1].
double q_average_generated(std::span<const QEval> q_gen, double discount,
                           int window);

/// Entropy-regularized Q-value: q - alpha * log_prob.
double soft_q(double q, double log_prob, double alpha);

/// Q-average with the entropy term placed per mode: Loaded applies soft_q
/// only to the final evaluation, Generated to all of them. q_evals has L
/// entries; in Loaded mode the last one is the final-state evaluation.
/// Throws ContractError when a required log_prob is absent.
double soft_q_average(ActionMode mode, std::span<const QEval> q_evals,
                      double discount, int window, double alpha);

/// Mean squared error between predictions and targets.
double critic_objective(std::span<const double> q_pred,
                        std::span<const double> targets);

/// Deterministic-policy actor loss: the negated Q-value at the policy's
/// action.
double actor_objective_ddpg(double q_at_policy_action);

}  // namespace mstd
