#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mstd/mdp.hpp"
#include "mstd/qtable.hpp"

namespace mstd {

/// Fixed full-support action law used for the intermediate steps of the
/// multi-step operator and for trajectory simulation.
struct BehaviorPolicy {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;  // s-major rows over actions

  double prob(int s, int a) const;
  int sample(int s, std::mt19937_64& gen) const;

  static BehaviorPolicy uniform(int num_states, int num_actions);
};

/// Empty result iff rows are nonnegative and sum to 1 within 1e-12.
std::vector<std::string> validate_behavior(const BehaviorPolicy& behavior);

/// Copy of the MDP whose terminal states are absorbing with zero reward, so
/// multi-step expectations truncate at termination.
FiniteMdp absorbing_normalized(const FiniteMdp& mdp);

/// The l-step lookahead operator: expected discounted reward over l steps
/// (first action given, later actions from the behavior policy) plus
/// discount^l max_b q(y,b) at the arrival state. Exact expectation, no
/// sampling. Throws BudgetError beyond |S||A| <= 64 or l > 5.
QTable apply_h_l(const QTable& q, const FiniteMdp& mdp, int l,
                 const BehaviorPolicy& behavior);

/// Mean of apply_h_l over l = 1..window.
QTable apply_h_bar(const QTable& q, const FiniteMdp& mdp, int window,
                   const BehaviorPolicy& behavior);

struct FixedPointResult {
  QTable q_f;
  int iterations = 0;
  double final_residual = 0.0;         // sup-norm of the last iterate delta
  std::vector<double> residuals;       // per-iteration deltas
};

/// Iterates q <- op(q) until the sup-norm delta drops to tol. Throws
/// ConvergenceError (with the last residual) when max_iter is exhausted.
FixedPointResult fixed_point(const std::function<QTable(const QTable&)>& op,
                             const QTable& q0, double tol, int max_iter);

/// Classical Bellman-optimality iteration, written independently of
/// apply_h_l so it can serve as an oracle for the l = 1 fixed point.
QTable value_iteration(const FiniteMdp& mdp, double tol, int max_iter = 1000000);

/// Max over `trials` random q-pairs (entries uniform in [-10,10]) of
///   ||H^l q1 - H^l q2||_inf / ||q1 - q2||_inf.
double contraction_test(const FiniteMdp& mdp, int l,
                        const BehaviorPolicy& behavior, int trials,
                        std::mt19937_64& gen);

/// alpha_t = alpha0 / (1 + t/t0)^kappa. kappa in (0.5, 1] gives the
/// square-summable-but-not-summable property. alpha0 = 0 is tolerated as a
/// degenerate no-learning schedule.
struct LrSchedule {
  double alpha0 = 0.5;
  double t0 = 2000.0;
  double kappa = 0.7;

  double at(std::uint64_t t) const;
};

void validate_schedule(const LrSchedule& schedule);

struct ConvergenceRunOptions {
  int window = 1;                   // L
  std::uint64_t updates = 100000;   // tabular updates to perform
  std::uint64_t record_every = 1000;
  int segment_length = 0;           // transitions per restart; 0 = 32 + L
  std::uint64_t seed = 1;
  double fixed_point_tol = 1e-10;   // tolerance for the reference Q^f
};

struct ConvergenceTrace {
  std::vector<std::pair<std::uint64_t, double>> residuals;  // (update, sup-norm)
  QTable q_final;
  QTable q_fixed;  // the Q^f the residuals are measured against
  double final_residual = 0.0;
};

/// Simulates behavior-policy trajectories in fixed-length segments from
/// uniformly random start states, applies the windowed tabular update per
/// step, and records ||Q_t - Q^f||_inf every record_every updates. Q^f is
/// the fixed point of the averaged operator, computed internally.
ConvergenceTrace run_tabular_convergence(const FiniteMdp& mdp,
                                         const BehaviorPolicy& behavior,
                                         const LrSchedule& schedule,
                                         const ConvergenceRunOptions& opts);

}  // namespace mstd
