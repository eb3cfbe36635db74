#include "mstd/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mstd/rng.hpp"

namespace mstd {

bool FiniteMdp::is_terminal(int s) const {
  return std::binary_search(terminal_states.begin(), terminal_states.end(), s);
}

FiniteMdp FiniteMdp::zeros(int num_states, int num_actions, double discount) {
  if (num_states <= 0 || num_actions <= 0)
    throw ContractError("FiniteMdp::zeros: state and action counts must be positive");
  FiniteMdp m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  std::size_t n = static_cast<std::size_t>(num_states) * num_actions * num_states;
  m.trans_prob.assign(n, 0.0);
  m.reward.assign(n, 0.0);
  m.discount = discount;
  return m;
}

std::vector<std::string> validate_mdp(const FiniteMdp& mdp) {
  std::vector<std::string> violations;
  auto add = [&](const std::string& msg) { violations.push_back(msg); };

  if (mdp.num_states <= 0) add("num_states must be positive");
  if (mdp.num_actions <= 0) add("num_actions must be positive");
  if (!violations.empty()) return violations;

  std::size_t expect =
      static_cast<std::size_t>(mdp.num_states) * mdp.num_actions * mdp.num_states;
  if (mdp.trans_prob.size() != expect) {
    add("trans_prob has wrong size");
    return violations;
  }
  if (mdp.reward.size() != expect) {
    add("reward has wrong size");
    return violations;
  }

  if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) {
    std::ostringstream os;
    os << "discount must lie in (0,1), got " << mdp.discount;
    add(os.str());
  }

  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < mdp.num_states; ++s2) {
        double p = mdp.p(s, a, s2);
        if (!(p >= 0.0)) {  // also catches NaN
          std::ostringstream os;
          os << "P[" << s << "][" << a << "][" << s2 << "] is negative or NaN";
          add(os.str());
        }
        sum += p;
        double r = mdp.r(s, a, s2);
        if (!std::isfinite(r) || std::fabs(r) > mdp.reward_bound + 1e-12) {
          std::ostringstream os;
          os << "R[" << s << "][" << a << "][" << s2 << "] = " << r
             << " exceeds declared bound " << mdp.reward_bound;
          add(os.str());
        }
      }
      if (std::fabs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "P[" << s << "][" << a << "] sums to " << sum << ", expected 1";
        add(os.str());
      }
    }
  }

  for (int t : mdp.terminal_states) {
    if (t < 0 || t >= mdp.num_states) {
      std::ostringstream os;
      os << "terminal state " << t << " out of range";
      add(os.str());
    }
  }
  return violations;
}

EpisodeReturn episode_return(const std::vector<double>& rewards, double discount) {
  if (!(discount > 0.0 && discount <= 1.0))
    throw ContractError("episode_return: discount must lie in (0,1]");
  double value = 0.0;
  double factor = 1.0;
  for (double r : rewards) {
    value += factor * r;
    factor *= discount;
  }
  return {value, discount};
}

FiniteMdp parse_mdp(std::istream& in, const std::string& origin) {
  auto fail = [&](const std::string& msg) -> void {
    throw ConfigError(origin + ": " + msg);
  };

  std::string line;
  // Header: states A actions B gamma G
  do {
    if (!std::getline(in, line)) fail("missing header line");
  } while (line.find_first_not_of(" \t\r") == std::string::npos);

  std::istringstream hs(line);
  std::string kw_states, kw_actions, kw_gamma;
  int num_states = 0, num_actions = 0;
  double gamma = 0.0;
  hs >> kw_states >> num_states >> kw_actions >> num_actions >> kw_gamma >> gamma;
  if (!hs || kw_states != "states" || kw_actions != "actions" || kw_gamma != "gamma")
    fail("bad header, expected 'states A actions B gamma G': " + line);
  if (num_states <= 0 || num_actions <= 0)
    fail("state and action counts must be positive");

  FiniteMdp mdp = FiniteMdp::zeros(num_states, num_actions, gamma);

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string trimmed = line;
    auto first = trimmed.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (trimmed[first] == '#') continue;

    std::ostringstream loc;
    loc << "line " << lineno;

    if (trimmed.compare(first, 9, "terminal:") == 0) {
      std::istringstream ts(trimmed.substr(first + 9));
      int t;
      while (ts >> t) {
        if (t < 0 || t >= num_states)
          fail(loc.str() + ": terminal state " + std::to_string(t) + " out of range");
        mdp.terminal_states.push_back(t);
      }
      if (!ts.eof()) fail(loc.str() + ": bad terminal state list");
      continue;
    }

    std::istringstream ls(trimmed);
    int s, a, s2;
    double prob, rew;
    ls >> s >> a >> s2 >> prob >> rew;
    if (!ls) fail(loc.str() + ": expected 's a s' prob reward': " + line);
    if (s < 0 || s >= num_states || s2 < 0 || s2 >= num_states)
      fail(loc.str() + ": state index out of range");
    if (a < 0 || a >= num_actions) fail(loc.str() + ": action index out of range");
    mdp.p(s, a, s2) = prob;
    mdp.r(s, a, s2) = rew;
  }

  std::sort(mdp.terminal_states.begin(), mdp.terminal_states.end());
  mdp.terminal_states.erase(
      std::unique(mdp.terminal_states.begin(), mdp.terminal_states.end()),
      mdp.terminal_states.end());

  double max_abs_r = 0.0;
  for (double r : mdp.reward) max_abs_r = std::max(max_abs_r, std::fabs(r));
  mdp.reward_bound = max_abs_r;

  auto violations = validate_mdp(mdp);
  if (!violations.empty()) {
    std::string msg = "invalid MDP:";
    for (const auto& v : violations) msg += "\n  " + v;
    fail(msg);
  }
  return mdp;
}

FiniteMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open MDP file: " + path);
  return parse_mdp(in, path);
}

void write_mdp(const FiniteMdp& mdp, std::ostream& out) {
  out.precision(17);
  out << "states " << mdp.num_states << " actions " << mdp.num_actions
      << " gamma " << mdp.discount << "\n";
  for (int s = 0; s < mdp.num_states; ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      for (int s2 = 0; s2 < mdp.num_states; ++s2)
        if (mdp.p(s, a, s2) != 0.0)
          out << s << " " << a << " " << s2 << " " << mdp.p(s, a, s2) << " "
              << mdp.r(s, a, s2) << "\n";
  if (!mdp.terminal_states.empty()) {
    out << "terminal:";
    for (int t : mdp.terminal_states) out << " " << t;
    out << "\n";
  }
}

void save_mdp(const FiniteMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  write_mdp(mdp, out);
  if (!out) throw ConfigError("write failed: " + path);
}

FiniteMdpEnv::FiniteMdpEnv(FiniteMdp mdp, int initial_state)
    : mdp_(std::move(mdp)), initial_state_(initial_state) {
  auto violations = validate_mdp(mdp_);
  if (!violations.empty())
    throw ContractError("FiniteMdpEnv: invalid MDP: " + violations.front());
  if (initial_state_ < 0 || initial_state_ >= mdp_.num_states)
    throw ContractError("FiniteMdpEnv: initial state out of range");
}

StateVec FiniteMdpEnv::reset(std::uint64_t seed) {
  gen_.seed(derive_seed(seed, "env"));
  state_ = initial_state_;
  return {static_cast<double>(state_)};
}

Transition FiniteMdpEnv::step(const ActionVec& action) {
  if (state_ < 0) throw ContractError("FiniteMdpEnv::step before reset");
  if (action.size() != 1)
    throw ContractError("FiniteMdpEnv::step: action must have one entry");
  double araw = action[0];
  int a = static_cast<int>(std::lround(araw));
  if (std::fabs(araw - a) > 1e-9 || a < 0 || a >= mdp_.num_actions)
    throw ContractError("FiniteMdpEnv::step: action index out of bounds");

  // Inverse-CDF draw over the P[s][a] row.
  double u = uniform01(gen_);
  int s2 = mdp_.num_states - 1;
  double acc = 0.0;
  for (int k = 0; k < mdp_.num_states; ++k) {
    acc += mdp_.p(state_, a, k);
    if (u < acc) {
      s2 = k;
      break;
    }
  }

  Transition t;
  t.state = {static_cast<double>(state_)};
  t.action = {static_cast<double>(a)};
  t.reward = mdp_.r(state_, a, s2);
  t.next_state = {static_cast<double>(s2)};
  t.terminated = mdp_.is_terminal(s2);
  state_ = s2;
  return t;
}

std::unique_ptr<Env> FiniteMdpEnv::clone() const {
  return std::make_unique<FiniteMdpEnv>(*this);
}

}  // namespace mstd
