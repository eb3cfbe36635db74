#pragma once

#include <span>
#include <vector>

#include "mstd/errors.hpp"

namespace mstd {

/// Dense Q(s,a) table for finite MDPs.
struct QTable {
  QTable() = default;
  QTable(int num_states, int num_actions, double fill = 0.0);

  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;  // s-major

  double& at(int s, int a);
  double at(int s, int a) const;

  /// max_b Q(s,b)
  double max_at(int s) const;
};

/// Largest absolute entry difference between two tables of equal shape.
double max_abs_diff(const QTable& a, const QTable& b);

/// One tabular update on the windowed trajectory fragment:
///   Q(s_0,a_0) += alpha_t * (1/L) * sum_{l=1..L} [ sum_{i=1..l} g^{i-1} r_i
///                                + g^l max_b Q(s_l,b) - Q(s_0,a_0) ]
/// states holds s_t..s_{t+L} (L+1 entries), rewards r_{t+1}..r_{t+L}
/// (L entries), action is a_t. Throws ContractError on bad indices, empty
/// window, alpha outside [0,1] or discount outside (0,1).
void tabular_mstd_update(QTable& q, std::span<const int> states, int action,
                         std::span<const double> rewards, double alpha_t,
                         double discount);

}  // namespace mstd
