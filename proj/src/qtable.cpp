#include "mstd/qtable.hpp"

#include <algorithm>
#include <cmath>

namespace mstd {

QTable::QTable(int num_states, int num_actions, double fill)
    : num_states(num_states), num_actions(num_actions),
      values(static_cast<std::size_t>(num_states) * num_actions, fill) {
  if (num_states < 1 || num_actions < 1)
    throw ContractError("QTable: state and action counts must be positive");
}

double& QTable::at(int s, int a) {
  if (s < 0 || s >= num_states || a < 0 || a >= num_actions)
    throw ContractError("QTable::at: index out of range");
  return values[static_cast<std::size_t>(s) * num_actions + a];
}

double QTable::at(int s, int a) const {
  if (s < 0 || s >= num_states || a < 0 || a >= num_actions)
    throw ContractError("QTable::at: index out of range");
  return values[static_cast<std::size_t>(s) * num_actions + a];
}

double QTable::max_at(int s) const {
  if (s < 0 || s >= num_states)
    throw ContractError("QTable::max_at: state out of range");
  const double* row = values.data() + static_cast<std::size_t>(s) * num_actions;
  return *std::max_element(row, row + num_actions);
}

double max_abs_diff(const QTable& a, const QTable& b) {
  if (a.num_states != b.num_states || a.num_actions != b.num_actions)
    throw ContractError("max_abs_diff: table shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::fabs(a.values[i] - b.values[i]));
  return m;
}

void tabular_mstd_update(QTable& q, std::span<const int> states, int action,
                         std::span<const double> rewards, double alpha_t,
                         double discount) {
  const std::size_t window = rewards.size();
  if (window == 0) throw ContractError("tabular_mstd_update: empty window");
  if (states.size() != window + 1)
    throw ContractError("tabular_mstd_update: need L+1 states for L rewards");
  if (!(alpha_t >= 0.0 && alpha_t <= 1.0))
    throw ContractError("tabular_mstd_update: alpha must lie in [0,1]");
  if (!(discount > 0.0 && discount < 1.0))
    throw ContractError("tabular_mstd_update: discount must lie in (0,1)");

  const double q_sa = q.at(states[0], action);  // also bounds-checks
  double reward_sum = 0.0;  // sum_{i<=l} discount^{i-1} r_i, grown per horizon
  double factor = 1.0;
  double td_sum = 0.0;
  for (std::size_t l = 1; l <= window; ++l) {
    reward_sum += factor * rewards[l - 1];
    factor *= discount;
    td_sum += reward_sum + factor * q.max_at(states[l]) - q_sa;
  }
  q.at(states[0], action) =
      q_sa + alpha_t * td_sum / static_cast<double>(window);
}

}  // namespace mstd
