#include "mstd/convergence.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "mstd/rng.hpp"

namespace mstd {

double BehaviorPolicy::prob(int s, int a) const {
  if (s < 0 || s >= num_states || a < 0 || a >= num_actions)
    throw ContractError("BehaviorPolicy::prob: index out of range");
  return probs[static_cast<std::size_t>(s) * num_actions + a];
}

int BehaviorPolicy::sample(int s, std::mt19937_64& gen) const {
  double u = uniform01(gen);
  double acc = 0.0;
  for (int a = 0; a < num_actions; ++a) {
    acc += prob(s, a);
    if (u < acc) return a;
  }
  return num_actions - 1;
}

BehaviorPolicy BehaviorPolicy::uniform(int num_states, int num_actions) {
  if (num_states < 1 || num_actions < 1)
    throw ContractError("BehaviorPolicy::uniform: counts must be positive");
  BehaviorPolicy b;
  b.num_states = num_states;
  b.num_actions = num_actions;
  b.probs.assign(static_cast<std::size_t>(num_states) * num_actions,
                 1.0 / num_actions);
  return b;
}

std::vector<std::string> validate_behavior(const BehaviorPolicy& behavior) {
  std::vector<std::string> out;
  if (behavior.num_states < 1 || behavior.num_actions < 1) {
    out.push_back("state and action counts must be positive");
    return out;
  }
  if (behavior.probs.size() != static_cast<std::size_t>(behavior.num_states) *
                                   behavior.num_actions) {
    out.push_back("probs has the wrong size");
    return out;
  }
  for (int s = 0; s < behavior.num_states; ++s) {
    double sum = 0.0;
    for (int a = 0; a < behavior.num_actions; ++a) {
      double p = behavior.prob(s, a);
      if (!(p >= 0.0)) {
        std::ostringstream os;
        os << "probs[" << s << "][" << a << "] is negative or NaN";
        out.push_back(os.str());
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "row " << s << " sums to " << sum;
      out.push_back(os.str());
    }
  }
  return out;
}

FiniteMdp absorbing_normalized(const FiniteMdp& mdp) {
  FiniteMdp m = mdp;
  for (int t : m.terminal_states) {
    for (int a = 0; a < m.num_actions; ++a) {
      for (int s2 = 0; s2 < m.num_states; ++s2) {
        m.p(t, a, s2) = s2 == t ? 1.0 : 0.0;
        m.r(t, a, s2) = 0.0;
      }
    }
  }
  return m;
}

namespace {

void check_operator_inputs(const QTable& q, const FiniteMdp& mdp, int l,
                           const BehaviorPolicy& behavior) {
  if (l < 1) throw ContractError("apply_h_l: l must be at least 1");
  auto mdp_bad = validate_mdp(mdp);
  if (!mdp_bad.empty())
    throw ContractError("apply_h_l: invalid MDP: " + mdp_bad.front());
  if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions)
    throw ContractError("apply_h_l: table shape does not match the MDP");
  if (behavior.num_states != mdp.num_states ||
      behavior.num_actions != mdp.num_actions)
    throw ContractError("apply_h_l: behavior shape does not match the MDP");
  auto behavior_bad = validate_behavior(behavior);
  if (!behavior_bad.empty())
    throw ContractError("apply_h_l: invalid behavior policy: " + behavior_bad.front());
  if (mdp.num_states * mdp.num_actions > 64)
    throw BudgetError("apply_h_l: |S||A| exceeds the exact-enumeration budget (64)");
  if (l > 5)
    throw BudgetError("apply_h_l: l exceeds the exact-enumeration budget (5)");
}

}  // namespace

QTable apply_h_l(const QTable& q, const FiniteMdp& mdp, int l,
                 const BehaviorPolicy& behavior) {
  check_operator_inputs(q, mdp, l, behavior);
  const FiniteMdp m = absorbing_normalized(mdp);
  const int S = m.num_states, A = m.num_actions;
  const double g = m.discount;

  // Backward accumulation over the remaining path length: after the k-step
  // tail from state s (actions from the behavior policy), the expected
  // discounted return including the final max-q bootstrap.
  std::vector<double> tail(S), next(S);
  for (int s = 0; s < S; ++s) tail[s] = q.max_at(s);
  for (int k = 1; k < l; ++k) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        double pa = behavior.prob(s, a);
        if (pa == 0.0) continue;
        double inner = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = m.p(s, a, s2);
          if (p == 0.0) continue;
          inner += p * (m.r(s, a, s2) + g * tail[s2]);
        }
        v += pa * inner;
      }
      next[s] = v;
    }
    tail.swap(next);
  }

  QTable out(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      double v = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        double p = m.p(s, a, s2);
        if (p == 0.0) continue;
        v += p * (m.r(s, a, s2) + g * tail[s2]);
      }
      out.at(s, a) = v;
    }
  return out;
}

QTable apply_h_bar(const QTable& q, const FiniteMdp& mdp, int window,
                   const BehaviorPolicy& behavior) {
  if (window < 1) throw ContractError("apply_h_bar: window must be at least 1");
  QTable sum(mdp.num_states, mdp.num_actions);
  for (int l = 1; l <= window; ++l) {
    QTable h = apply_h_l(q, mdp, l, behavior);
    for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += h.values[i];
  }
  for (double& v : sum.values) v /= static_cast<double>(window);
  return sum;
}

FixedPointResult fixed_point(const std::function<QTable(const QTable&)>& op,
                             const QTable& q0, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ContractError("fixed_point: tol must be positive");
  if (max_iter < 1) throw ContractError("fixed_point: max_iter must be positive");

  FixedPointResult res;
  QTable q = q0;
  for (int i = 1; i <= max_iter; ++i) {
    QTable next = op(q);
    double delta = max_abs_diff(next, q);
    res.residuals.push_back(delta);
    q = std::move(next);
    if (delta <= tol) {
      res.q_f = std::move(q);
      res.iterations = i;
      res.final_residual = delta;
      return res;
    }
  }
  throw ConvergenceError("fixed_point: no convergence within the iteration budget",
                         res.residuals.back());
}

QTable value_iteration(const FiniteMdp& mdp, double tol, int max_iter) {
  auto bad = validate_mdp(mdp);
  if (!bad.empty())
    throw ContractError("value_iteration: invalid MDP: " + bad.front());
  if (!(tol > 0.0)) throw ContractError("value_iteration: tol must be positive");

  const FiniteMdp m = absorbing_normalized(mdp);
  const int S = m.num_states, A = m.num_actions;
  QTable q(S, A);
  for (int i = 0; i < max_iter; ++i) {
    QTable next(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        double v = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          double p = m.p(s, a, s2);
          if (p == 0.0) continue;
          v += p * (m.r(s, a, s2) + m.discount * q.max_at(s2));
        }
        next.at(s, a) = v;
      }
    double delta = max_abs_diff(next, q);
    q = std::move(next);
    if (delta <= tol) return q;
  }
  throw ConvergenceError("value_iteration: no convergence within the budget", tol);
}

double contraction_test(const FiniteMdp& mdp, int l,
                        const BehaviorPolicy& behavior, int trials,
                        std::mt19937_64& gen) {
  if (trials < 1) throw ContractError("contraction_test: trials must be positive");
  const int S = mdp.num_states, A = mdp.num_actions;

  auto random_table = [&] {
    QTable q(S, A);
    for (double& v : q.values) v = uniform_range(gen, -10.0, 10.0);
    return q;
  };

  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    QTable q1 = random_table();
    QTable q2 = random_table();
    double gap = max_abs_diff(q1, q2);
    while (gap == 0.0) {  // same draw: try again
      q2 = random_table();
      gap = max_abs_diff(q1, q2);
    }
    double mapped = max_abs_diff(apply_h_l(q1, mdp, l, behavior),
                                 apply_h_l(q2, mdp, l, behavior));
    worst = std::max(worst, mapped / gap);
  }
  return worst;
}

double LrSchedule::at(std::uint64_t t) const {
  return alpha0 / std::pow(1.0 + static_cast<double>(t) / t0, kappa);
}

void validate_schedule(const LrSchedule& schedule) {
  if (!(schedule.alpha0 >= 0.0 && schedule.alpha0 <= 1.0))
    throw ContractError("LrSchedule: alpha0 must lie in [0,1]");
  if (!(schedule.t0 > 0.0)) throw ContractError("LrSchedule: t0 must be positive");
  if (!(schedule.kappa > 0.5 && schedule.kappa <= 1.0))
    throw ContractError("LrSchedule: kappa must lie in (0.5,1]");
}

ConvergenceTrace run_tabular_convergence(const FiniteMdp& mdp,
                                         const BehaviorPolicy& behavior,
                                         const LrSchedule& schedule,
                                         const ConvergenceRunOptions& opts) {
  validate_schedule(schedule);
  if (opts.window < 1)
    throw ContractError("run_tabular_convergence: window must be at least 1");
  if (opts.updates < 1)
    throw ContractError("run_tabular_convergence: need at least one update");
  if (opts.record_every < 1)
    throw ContractError("run_tabular_convergence: record_every must be positive");

  const FiniteMdp m = absorbing_normalized(mdp);
  const int S = m.num_states;
  const int L = opts.window;
  const double g = m.discount;

  QTable q0(S, m.num_actions);
  FixedPointResult fp = fixed_point(
      [&](const QTable& q) { return apply_h_bar(q, m, L, behavior); }, q0,
      opts.fixed_point_tol, 1000000);

  const int segment =
      opts.segment_length > 0 ? opts.segment_length : 32 + L;
  if (segment < L + 1)
    throw ContractError("run_tabular_convergence: segment shorter than the window");

  std::mt19937_64 gen(derive_seed(opts.seed, "tabular"));
  QTable q(S, m.num_actions);
  ConvergenceTrace trace;
  trace.residuals.emplace_back(0, max_abs_diff(q, fp.q_f));

  std::deque<int> states;
  std::deque<int> actions;
  std::deque<double> rewards;
  std::vector<int> state_buf(L + 1);
  std::vector<double> reward_buf(L);

  std::uint64_t t = 0;
  while (t < opts.updates) {
    int s = static_cast<int>(uniform_index(gen, static_cast<std::uint64_t>(S)));
    states.assign(1, s);
    actions.clear();
    rewards.clear();
    // Stop wandering inside an absorbing state once the window has drained
    // past it; restarting keeps every (s,a) visited often.
    int absorb_left = -1;

    for (int step = 0; step < segment && t < opts.updates; ++step) {
      int cur = states.back();
      int a = behavior.sample(cur, gen);
      double u = uniform01(gen);
      int nxt = S - 1;
      double acc = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        acc += m.p(cur, a, s2);
        if (u < acc) {
          nxt = s2;
          break;
        }
      }
      states.push_back(nxt);
      actions.push_back(a);
      rewards.push_back(m.r(cur, a, nxt));

      if (states.size() == static_cast<std::size_t>(L) + 1) {
        std::copy(states.begin(), states.end(), state_buf.begin());
        std::copy(rewards.begin(), rewards.end(), reward_buf.begin());
        tabular_mstd_update(q, state_buf, actions.front(), reward_buf,
                            schedule.at(t), g);
        ++t;
        if (t % opts.record_every == 0)
          trace.residuals.emplace_back(t, max_abs_diff(q, fp.q_f));
        states.pop_front();
        actions.pop_front();
        rewards.pop_front();
      }

      if (m.is_terminal(nxt)) {
        if (absorb_left < 0) absorb_left = L;
        if (absorb_left-- == 0) break;
      }
    }
  }

  if (trace.residuals.back().first != t)
    trace.residuals.emplace_back(t, max_abs_diff(q, fp.q_f));
  trace.q_final = std::move(q);
  trace.q_fixed = std::move(fp.q_f);
  trace.final_residual = trace.residuals.back().second;
  return trace;
}

}  // namespace mstd
