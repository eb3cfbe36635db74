#include "mstd/td_targets.hpp"

#include <cmath>

namespace mstd {

namespace {

void check_discount(double discount) {
  if (!(discount > 0.0 && discount < 1.0))
    throw ContractError("discount must lie in (0,1)");
}

}  // namespace

void validate_target_spec(const TargetSpec& spec) {
  if (spec.window < 1) throw ContractError("TargetSpec: window must be at least 1");
  if (spec.kind == TargetKind::SingleStep && spec.window != 1)
    throw ContractError("TargetSpec: SingleStep forces window = 1");
  check_discount(spec.discount);
  if (spec.soft_alpha) {
    if (!std::isfinite(*spec.soft_alpha) || *spec.soft_alpha < 0.0)
      throw ContractError("TargetSpec: soft alpha must be finite and nonnegative");
  }
}

double single_step_target(double r, const QEval& q_next, double discount,
                          bool terminal) {
  check_discount(discount);
  return r + discount * (terminal ? 0.0 : q_next.value);
}

double multi_step_target(std::span<const double> rewards,
                         std::span<const std::uint8_t> pad_flags,
                         const QEval& q_horizon, double discount,
                         bool terminal_flag) {
  check_discount(discount);
  if (rewards.empty()) throw ContractError("multi_step_target: empty rewards");
  if (rewards.size() != pad_flags.size())
    throw ContractError("multi_step_target: rewards/pad_flags length mismatch");

  double sum = 0.0;
  double factor = 1.0;  // discount^(i-1) for reward i
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    sum += factor * (pad_flags[i] ? 0.0 : rewards[i]);
    factor *= discount;
  }
  sum += factor * (terminal_flag ? 0.0 : q_horizon.value);
  return sum;
}

double mstd_target(std::span<const double> rewards,
                   std::span<const std::uint8_t> pad_flags,
                   std::span<const QEval> q_values, double discount,
                   bool terminal_flag) {
  check_discount(discount);
  const std::size_t window = rewards.size();
  if (window == 0) throw ContractError("mstd_target: empty rewards");
  if (pad_flags.size() != window || q_values.size() != window)
    throw ContractError("mstd_target: field length mismatch");

  double sum = 0.0;
  for (std::size_t l = 1; l <= window; ++l) {
    // The horizon-l bootstrap sits at S_l, which is padded when triplet l is.
    bool cut = l < window ? pad_flags[l] != 0 : terminal_flag;
    sum += multi_step_target(rewards.first(l), pad_flags.first(l),
                             q_values[l - 1], discount, cut);
  }
  return sum / static_cast<double>(window);
}

double q_average_loaded(std::span<const QEval> q_loaded, const QEval& q_final,
                        double discount, int window) {
  check_discount(discount);
  if (window < 1) throw ContractError("q_average_loaded: window must be at least 1");
  if (q_loaded.size() != static_cast<std::size_t>(window - 1))
    throw ContractError("q_average_loaded: expected window-1 loaded evaluations");

  double sum = 0.0;
  double factor = 1.0;
  for (const QEval& q : q_loaded) {
    factor *= discount;
    sum += factor * q.value;
  }
  factor *= discount;  // discount^window
  sum += factor * q_final.value;
  return sum / static_cast<double>(window);
}

double q_average_generated(std::span<const QEval> q_gen, double discount,
                           int window) {
  check_discount(discount);
  if (window < 1)
    throw ContractError("q_average_generated: window must be at least 1");
  if (q_gen.size() != static_cast<std::size_t>(window))
    throw ContractError("q_average_generated: expected window evaluations");

  double sum = 0.0;
  double factor = 1.0;
  for (const QEval& q : q_gen) {
    factor *= discount;
    sum += factor * q.value;
  }
  return sum / static_cast<double>(window);
}

double soft_q(double q, double log_prob, double alpha) {
  if (!(alpha >= 0.0)) throw ContractError("soft_q: alpha must be nonnegative");
  return q - alpha * log_prob;
}

double soft_q_average(ActionMode mode, std::span<const QEval> q_evals,
                      double discount, int window, double alpha) {
  check_discount(discount);
  if (window < 1) throw ContractError("soft_q_average: window must be at least 1");
  if (q_evals.size() != static_cast<std::size_t>(window))
    throw ContractError("soft_q_average: expected window evaluations");

  double sum = 0.0;
  double factor = 1.0;
  for (int l = 1; l <= window; ++l) {
    const QEval& q = q_evals[l - 1];
    bool softened = mode == ActionMode::Generated || l == window;
    factor *= discount;
    if (softened) {
      if (!q.log_prob)
        throw ContractError("soft_q_average: log_prob required for entropy term");
      sum += factor * soft_q(q.value, *q.log_prob, alpha);
    } else {
      sum += factor * q.value;
    }
  }
  return sum / static_cast<double>(window);
}

double critic_objective(std::span<const double> q_pred,
                        std::span<const double> targets) {
  if (q_pred.empty()) throw ContractError("critic_objective: empty batch");
  if (q_pred.size() != targets.size())
    throw ContractError("critic_objective: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < q_pred.size(); ++i) {
    double d = q_pred[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(q_pred.size());
}

double actor_objective_ddpg(double q_at_policy_action) {
  return -q_at_policy_action;
}

}  // namespace mstd
