#include "mstd/agents.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mstd/rng.hpp"

namespace mstd {

bool is_sac_family(Algo algo) {
  return algo == Algo::Sac || algo == Algo::MpSac || algo == Algo::MsSac;
}

TargetKind target_kind(Algo algo) {
  switch (algo) {
    case Algo::Ddpg:
    case Algo::Sac:
      return TargetKind::SingleStep;
    case Algo::MpDdpg:
    case Algo::MpSac:
      return TargetKind::MultiStep;
    case Algo::MsDdpg:
    case Algo::MsSac:
      return TargetKind::MultiState;
  }
  throw ContractError("target_kind: unknown algo");
}

Algo parse_algo(const std::string& name) {
  if (name == "ddpg") return Algo::Ddpg;
  if (name == "mpddpg") return Algo::MpDdpg;
  if (name == "msddpg") return Algo::MsDdpg;
  if (name == "sac") return Algo::Sac;
  if (name == "mpsac") return Algo::MpSac;
  if (name == "mssac") return Algo::MsSac;
  throw ConfigError("unknown algo: " + name);
}

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::Ddpg: return "ddpg";
    case Algo::MpDdpg: return "mpddpg";
    case Algo::MsDdpg: return "msddpg";
    case Algo::Sac: return "sac";
    case Algo::MpSac: return "mpsac";
    case Algo::MsSac: return "mssac";
  }
  throw ContractError("algo_name: unknown algo");
}

void validate_agent_config(const AgentConfig& config) {
  if (config.window < 1) throw ContractError("AgentConfig: window must be >= 1");
  if (target_kind(config.algo) == TargetKind::SingleStep && config.window != 1)
    throw ContractError("AgentConfig: plain DDPG/SAC require window = 1");
  if (!(config.discount > 0.0 && config.discount < 1.0))
    throw ContractError("AgentConfig: discount must lie in (0,1)");
  if (!(config.tau > 0.0 && config.tau <= 1.0))
    throw ContractError("AgentConfig: tau must lie in (0,1]");
  if (config.batch_size < 1) throw ContractError("AgentConfig: batch_size must be >= 1");
  if (config.lr < 0.0) throw ContractError("AgentConfig: lr must be nonnegative");
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha))
    throw ContractError("AgentConfig: alpha must be finite and nonnegative");
  if (config.hidden < 1) throw ContractError("AgentConfig: hidden must be >= 1");
  if (config.buffer_capacity == 0)
    throw ContractError("AgentConfig: buffer capacity must be positive");
  if (config.warmup < 0) throw ContractError("AgentConfig: warmup must be >= 0");
}

double effective_lr(const AgentConfig& config) {
  if (config.lr > 0.0) return config.lr;
  return is_sac_family(config.algo) ? 0.0004 : 0.0003;
}

int effective_warmup(const AgentConfig& config) {
  return std::max(config.warmup, config.batch_size);
}

TargetSpec make_target_spec(const AgentConfig& config) {
  TargetSpec spec;
  spec.kind = target_kind(config.algo);
  spec.window = config.window;
  spec.action_mode = config.action_mode;
  if (is_sac_family(config.algo)) spec.soft_alpha = config.alpha;
  spec.discount = config.discount;
  validate_target_spec(spec);
  return spec;
}

namespace {

// Column n holds sample n's state at triplet index `idx`.
Eigen::MatrixXd states_matrix(const std::vector<MultiStateSample>& batch,
                              std::size_t idx, int obs_dim) {
  Eigen::MatrixXd m(obs_dim, batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const StateVec& s = batch[n].states.at(idx);
    if (s.size() != static_cast<std::size_t>(obs_dim))
      throw ContractError("batch state dimension mismatch");
    for (int i = 0; i < obs_dim; ++i) m(i, n) = s[i];
  }
  return m;
}

Eigen::MatrixXd actions_matrix(const std::vector<MultiStateSample>& batch,
                               std::size_t idx, int act_dim) {
  Eigen::MatrixXd m(act_dim, batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const ActionVec& a = batch[n].actions.at(idx);
    if (a.size() != static_cast<std::size_t>(act_dim))
      throw ContractError("batch action dimension mismatch");
    for (int i = 0; i < act_dim; ++i) m(i, n) = a[i];
  }
  return m;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd m(top.rows() + bottom.rows(), top.cols());
  m.topRows(top.rows()) = top;
  m.bottomRows(bottom.rows()) = bottom;
  return m;
}

// Horizon indices evaluated for a target spec: every l for the multi-state
// average, only the final one otherwise.
std::vector<int> target_horizons(const TargetSpec& spec) {
  if (spec.kind == TargetKind::MultiState) {
    std::vector<int> hs(spec.window);
    for (int l = 1; l <= spec.window; ++l) hs[l - 1] = l;
    return hs;
  }
  return {spec.window};
}

void check_batch(const std::vector<MultiStateSample>& batch, int window) {
  if (batch.empty()) throw ContractError("empty minibatch");
  for (const MultiStateSample& s : batch)
    if (s.actions.size() != static_cast<std::size_t>(window))
      throw ContractError("minibatch sample window length mismatch");
}

double compose_target(const TargetSpec& spec, const MultiStateSample& s,
                      std::span<const QEval> q_values) {
  switch (spec.kind) {
    case TargetKind::SingleStep:
      return single_step_target(s.rewards[0], q_values[0], spec.discount,
                                s.terminal_flag);
    case TargetKind::MultiStep:
      return multi_step_target(s.rewards, s.pad_flags, q_values[spec.window - 1],
                               spec.discount, s.terminal_flag);
    case TargetKind::MultiState:
      return mstd_target(s.rewards, s.pad_flags, q_values, spec.discount,
                         s.terminal_flag);
  }
  throw ContractError("compose_target: unknown kind");
}

}  // namespace

Eigen::VectorXd ddpg_targets(const std::vector<MultiStateSample>& batch,
                             const Mlp& target_actor, const Mlp& target_critic,
                             const TargetSpec& spec) {
  validate_target_spec(spec);
  check_batch(batch, spec.window);
  const std::size_t n_samples = batch.size();
  const int obs_dim = target_actor.input_dim();
  const int act_dim = target_actor.output_dim();
  if (target_critic.input_dim() != obs_dim + act_dim)
    throw ContractError("ddpg_targets: critic input dimension mismatch");

  const std::vector<int> horizons = target_horizons(spec);
  const std::size_t blocks = horizons.size();

  Eigen::MatrixXd states(obs_dim, blocks * n_samples);
  for (std::size_t k = 0; k < blocks; ++k)
    states.middleCols(k * n_samples, n_samples) =
        states_matrix(batch, horizons[k], obs_dim);

  Eigen::MatrixXd actions(act_dim, blocks * n_samples);
  if (spec.action_mode == ActionMode::Generated) {
    actions = target_actor.forward(states);
  } else {
    for (std::size_t k = 0; k < blocks; ++k) {
      int h = horizons[k];
      if (h == spec.window) {
        actions.middleCols(k * n_samples, n_samples) = target_actor.forward(
            states.middleCols(k * n_samples, n_samples));
      } else {
        // Stored action taken at S_h.
        actions.middleCols(k * n_samples, n_samples) =
            actions_matrix(batch, h, act_dim);
      }
    }
  }

  Eigen::MatrixXd q = target_critic.forward(stack_rows(states, actions));

  Eigen::VectorXd targets(n_samples);
  std::vector<QEval> q_values(spec.window);
  for (std::size_t n = 0; n < n_samples; ++n) {
    for (std::size_t k = 0; k < blocks; ++k)
      q_values[horizons[k] - 1] = {q(0, k * n_samples + n), std::nullopt};
    targets(n) = compose_target(spec, batch[n], q_values);
  }
  return targets;
}

Eigen::VectorXd sac_targets(const std::vector<MultiStateSample>& batch,
                            const Mlp& actor, const SquashedGaussianHead& head,
                            const Mlp& target_q1, const Mlp& target_q2,
                            const TargetSpec& spec, double alpha,
                            std::mt19937_64& gen) {
  validate_target_spec(spec);
  check_batch(batch, spec.window);
  const std::size_t n_samples = batch.size();
  const int obs_dim = actor.input_dim();
  const int act_dim = head.action_dim();
  if (actor.output_dim() != 2 * act_dim)
    throw ContractError("sac_targets: actor must emit mean and log-std rows");
  if (target_q1.input_dim() != obs_dim + act_dim ||
      target_q2.input_dim() != obs_dim + act_dim)
    throw ContractError("sac_targets: critic input dimension mismatch");

  const std::vector<int> horizons = target_horizons(spec);
  const std::size_t blocks = horizons.size();
  auto sampled = [&](int h) {
    return spec.action_mode == ActionMode::Generated || h == spec.window;
  };

  Eigen::MatrixXd states(obs_dim, blocks * n_samples);
  for (std::size_t k = 0; k < blocks; ++k)
    states.middleCols(k * n_samples, n_samples) =
        states_matrix(batch, horizons[k], obs_dim);

  // One actor pass and one noise draw over all sampled blocks, in ascending
  // horizon order, so the stream consumption is reproducible.
  std::size_t n_sampled_blocks = 0;
  for (std::size_t k = 0; k < blocks; ++k)
    if (sampled(horizons[k])) ++n_sampled_blocks;
  Eigen::MatrixXd sampled_states(obs_dim, n_sampled_blocks * n_samples);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < blocks; ++k)
    if (sampled(horizons[k])) {
      sampled_states.middleCols(pos * n_samples, n_samples) =
          states.middleCols(k * n_samples, n_samples);
      ++pos;
    }

  SquashedGaussianHead::Cache head_cache;
  SquashedGaussianHead::Result draw;
  if (n_sampled_blocks > 0)
    draw = head.sample(actor.forward(sampled_states), gen, head_cache);

  Eigen::MatrixXd actions(act_dim, blocks * n_samples);
  Eigen::VectorXd log_probs = Eigen::VectorXd::Zero(blocks * n_samples);
  pos = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    int h = horizons[k];
    if (sampled(h)) {
      actions.middleCols(k * n_samples, n_samples) =
          draw.actions.middleCols(pos * n_samples, n_samples);
      log_probs.segment(k * n_samples, n_samples) =
          draw.log_probs.segment(pos * n_samples, n_samples);
      ++pos;
    } else {
      actions.middleCols(k * n_samples, n_samples) =
          actions_matrix(batch, h, act_dim);
    }
  }

  Eigen::MatrixXd input = stack_rows(states, actions);
  Eigen::MatrixXd q1 = target_q1.forward(input);
  Eigen::MatrixXd q2 = target_q2.forward(input);

  Eigen::VectorXd targets(n_samples);
  std::vector<QEval> q_values(spec.window);
  for (std::size_t n = 0; n < n_samples; ++n) {
    for (std::size_t k = 0; k < blocks; ++k) {
      int h = horizons[k];
      std::size_t col = k * n_samples + n;
      double q_min = std::min(q1(0, col), q2(0, col));
      if (sampled(h)) {
        double lp = log_probs(col);
        q_values[h - 1] = {soft_q(q_min, lp, alpha), lp};
      } else {
        q_values[h - 1] = {q_min, std::nullopt};
      }
    }
    targets(n) = compose_target(spec, batch[n], q_values);
  }
  return targets;
}

double critic_loss_and_grads(const Mlp& critic, const Eigen::MatrixXd& obs,
                             const Eigen::MatrixXd& act,
                             const Eigen::VectorXd& targets,
                             std::span<double> grads) {
  const auto n = obs.cols();
  if (act.cols() != n || targets.size() != n)
    throw ContractError("critic_loss_and_grads: batch size mismatch");

  Mlp::Cache cache;
  Eigen::MatrixXd q = critic.forward(stack_rows(obs, act), cache);
  if (q.rows() != 1) throw ContractError("critic_loss_and_grads: critic must be scalar");

  std::vector<double> q_pred(q.data(), q.data() + n);
  std::vector<double> tgt(targets.data(), targets.data() + n);
  double loss = critic_objective(q_pred, tgt);

  if (!grads.empty()) {
    Eigen::MatrixXd upstream =
        (2.0 / static_cast<double>(n)) * (q.row(0).transpose() - targets).transpose();
    critic.backward(cache, upstream, grads);
  }
  return loss;
}

double ddpg_actor_loss_and_grads(const Mlp& actor, const Mlp& critic,
                                 const Eigen::MatrixXd& obs,
                                 std::span<double> actor_grads) {
  const auto n = obs.cols();
  if (n == 0) throw ContractError("ddpg_actor_loss_and_grads: empty batch");

  Mlp::Cache actor_cache;
  Eigen::MatrixXd actions = actor.forward(obs, actor_cache);
  Mlp::Cache critic_cache;
  Eigen::MatrixXd q = critic.forward(stack_rows(obs, actions), critic_cache);

  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) loss += actor_objective_ddpg(q(0, j));
  loss /= static_cast<double>(n);

  if (!actor_grads.empty()) {
    Eigen::MatrixXd upstream =
        Eigen::MatrixXd::Constant(1, n, -1.0 / static_cast<double>(n));
    Eigen::MatrixXd d_input;
    critic.backward(critic_cache, upstream, {}, &d_input);
    Eigen::MatrixXd d_actions = d_input.bottomRows(actions.rows());
    actor.backward(actor_cache, d_actions, actor_grads);
  }
  return loss;
}

double sac_actor_loss_and_grads(const Mlp& actor,
                                const SquashedGaussianHead& head,
                                const Mlp& q1, const Mlp& q2,
                                const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& xi, double alpha,
                                std::span<double> actor_grads) {
  const auto n = obs.cols();
  if (n == 0) throw ContractError("sac_actor_loss_and_grads: empty batch");

  Mlp::Cache actor_cache;
  Eigen::MatrixXd head_out = actor.forward(obs, actor_cache);
  SquashedGaussianHead::Cache head_cache;
  SquashedGaussianHead::Result res = head.transform(head_out, xi, head_cache);

  Eigen::MatrixXd input = stack_rows(obs, res.actions);
  Mlp::Cache c1, c2;
  Eigen::MatrixXd v1 = q1.forward(input, c1);
  Eigen::MatrixXd v2 = q2.forward(input, c2);

  double loss = 0.0;
  Eigen::MatrixXd up1 = Eigen::MatrixXd::Zero(1, n);
  Eigen::MatrixXd up2 = Eigen::MatrixXd::Zero(1, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double q_min = std::min(v1(0, j), v2(0, j));
    loss += (alpha * res.log_probs(j) - q_min) * inv_n;
    if (v1(0, j) <= v2(0, j)) up1(0, j) = -inv_n;
    else up2(0, j) = -inv_n;
  }

  if (!actor_grads.empty()) {
    Eigen::MatrixXd d_in1, d_in2;
    q1.backward(c1, up1, {}, &d_in1);
    q2.backward(c2, up2, {}, &d_in2);
    Eigen::MatrixXd d_actions = d_in1.bottomRows(res.actions.rows()) +
                                d_in2.bottomRows(res.actions.rows());
    Eigen::VectorXd d_log_probs = Eigen::VectorXd::Constant(n, alpha * inv_n);
    Eigen::MatrixXd d_head = head.backward(head_cache, d_actions, d_log_probs);
    actor.backward(actor_cache, d_head, actor_grads);
  }
  return loss;
}

namespace {

Eigen::VectorXd symmetric_action_scale(const Env& env) {
  ActionVec low = env.action_low();
  ActionVec high = env.action_high();
  Eigen::VectorXd scale(high.size());
  for (std::size_t i = 0; i < high.size(); ++i) {
    if (std::fabs(low[i] + high[i]) > 1e-12 || high[i] <= 0.0)
      throw ContractError("agents require symmetric action bounds");
    scale(i) = high[i];
  }
  return scale;
}

Eigen::MatrixXd obs_column(const StateVec& state, int obs_dim) {
  if (state.size() != static_cast<std::size_t>(obs_dim))
    throw ContractError("act: state dimension mismatch");
  Eigen::MatrixXd m(obs_dim, 1);
  for (int i = 0; i < obs_dim; ++i) m(i, 0) = state[i];
  return m;
}

class DdpgAgent final : public Agent {
 public:
  DdpgAgent(const AgentConfig& config, const Env& env, std::uint64_t seed)
      : config_(config), spec_(make_target_spec(config)),
        obs_dim_(env.obs_dim()), act_dim_(env.action_dim()),
        scale_(symmetric_action_scale(env)),
        noise_(env.action_dim(), config.ou_mu, config.ou_theta, config.ou_sigma),
        seed_(seed) {
    validate_agent_config(config);
    const int h = config.hidden;
    actor_ = Mlp({obs_dim_, h, h, act_dim_}, Mlp::Output::TanhScaled, scale_);
    critic_ = Mlp({obs_dim_ + act_dim_, h, h, 1});
    actor_.init_uniform(derive_seed(seed, "actor-init"));
    critic_.init_uniform(derive_seed(seed, "critic-init"));
    target_actor_ = actor_;
    target_critic_ = critic_;
    actor_opt_ = AdamState(actor_.param_count(), effective_lr(config));
    critic_opt_ = AdamState(critic_.param_count(), effective_lr(config));
  }

  const AgentConfig& config() const override { return config_; }
  std::uint64_t train_steps() const override { return steps_; }
  void begin_episode() override { noise_.reset(); }

  ActionVec act(const StateVec& state, bool explore,
                std::mt19937_64& gen) override {
    Eigen::MatrixXd a = actor_.forward(obs_column(state, obs_dim_));
    ActionVec out(act_dim_);
    if (explore) {
      const std::vector<double>& n = noise_.sample(gen);
      for (int i = 0; i < act_dim_; ++i)
        out[i] = std::clamp(a(i, 0) + n[i], -scale_(i), scale_(i));
    } else {
      for (int i = 0; i < act_dim_; ++i) out[i] = a(i, 0);
    }
    return out;
  }

  TrainResult train_step(const RingBuffer& buffer, std::mt19937_64& gen) override {
    if (buffer.size() < static_cast<std::size_t>(effective_warmup(config_)))
      return {};
    auto batch = sample_minibatch(buffer, config_.batch_size, gen);
    Eigen::VectorXd targets = ddpg_targets(batch, target_actor_, target_critic_, spec_);

    Eigen::MatrixXd obs0 = states_matrix(batch, 0, obs_dim_);
    Eigen::MatrixXd act0 = actions_matrix(batch, 0, act_dim_);

    grad_buf_.assign(critic_.param_count(), 0.0);
    double critic_loss =
        critic_loss_and_grads(critic_, obs0, act0, targets, grad_buf_);
    adam_step(critic_opt_, critic_.params(), grad_buf_);

    grad_buf_.assign(actor_.param_count(), 0.0);
    double actor_loss = ddpg_actor_loss_and_grads(actor_, critic_, obs0, grad_buf_);
    adam_step(actor_opt_, actor_.params(), grad_buf_);

    soft_update(target_critic_.params(), critic_.params(), config_.tau);
    soft_update(target_actor_.params(), actor_.params(), config_.tau);
    ++steps_;
    return {critic_loss, actor_loss, true};
  }

  std::vector<std::string> save(const std::string& prefix) const override {
    std::vector<std::string> paths;
    auto dump = [&](const Mlp& net, const std::string& name) {
      Checkpoint ckpt{net.layer_sizes(), seed_, steps_,
                      {net.params().begin(), net.params().end()}};
      std::string path = prefix + name + ".ckpt";
      save_checkpoint(path, ckpt);
      paths.push_back(path);
    };
    dump(actor_, "actor");
    dump(critic_, "critic");
    dump(target_actor_, "target_actor");
    dump(target_critic_, "target_critic");
    return paths;
  }

 private:
  AgentConfig config_;
  TargetSpec spec_;
  int obs_dim_, act_dim_;
  Eigen::VectorXd scale_;
  Mlp actor_, critic_, target_actor_, target_critic_;
  AdamState actor_opt_, critic_opt_;
  OuNoise noise_;
  std::uint64_t seed_;
  std::uint64_t steps_ = 0;
  std::vector<double> grad_buf_;
};

class SacAgent final : public Agent {
 public:
  SacAgent(const AgentConfig& config, const Env& env, std::uint64_t seed)
      : config_(config), spec_(make_target_spec(config)),
        obs_dim_(env.obs_dim()), act_dim_(env.action_dim()),
        head_(symmetric_action_scale(env)), seed_(seed) {
    validate_agent_config(config);
    const int h = config.hidden;
    actor_ = Mlp({obs_dim_, h, h, 2 * act_dim_});
    q1_ = Mlp({obs_dim_ + act_dim_, h, h, 1});
    q2_ = Mlp({obs_dim_ + act_dim_, h, h, 1});
    actor_.init_uniform(derive_seed(seed, "actor-init"));
    q1_.init_uniform(derive_seed(seed, "critic-init"));
    q2_.init_uniform(derive_seed(seed, "critic2-init"));
    target_q1_ = q1_;
    target_q2_ = q2_;
    actor_opt_ = AdamState(actor_.param_count(), effective_lr(config));
    q1_opt_ = AdamState(q1_.param_count(), effective_lr(config));
    q2_opt_ = AdamState(q2_.param_count(), effective_lr(config));
  }

  const AgentConfig& config() const override { return config_; }
  std::uint64_t train_steps() const override { return steps_; }
  void begin_episode() override {}

  ActionVec act(const StateVec& state, bool explore,
                std::mt19937_64& gen) override {
    Eigen::MatrixXd head_out = actor_.forward(obs_column(state, obs_dim_));
    Eigen::MatrixXd a;
    if (explore) {
      SquashedGaussianHead::Cache cache;
      a = head_.sample(head_out, gen, cache).actions;
    } else {
      a = head_.mean_action(head_out);
    }
    ActionVec out(act_dim_);
    for (int i = 0; i < act_dim_; ++i) out[i] = a(i, 0);
    return out;
  }

  TrainResult train_step(const RingBuffer& buffer, std::mt19937_64& gen) override {
    if (buffer.size() < static_cast<std::size_t>(effective_warmup(config_)))
      return {};
    auto batch = sample_minibatch(buffer, config_.batch_size, gen);
    Eigen::VectorXd targets = sac_targets(batch, actor_, head_, target_q1_,
                                          target_q2_, spec_, config_.alpha, gen);

    Eigen::MatrixXd obs0 = states_matrix(batch, 0, obs_dim_);
    Eigen::MatrixXd act0 = actions_matrix(batch, 0, act_dim_);

    grad_buf_.assign(q1_.param_count(), 0.0);
    double loss1 = critic_loss_and_grads(q1_, obs0, act0, targets, grad_buf_);
    adam_step(q1_opt_, q1_.params(), grad_buf_);

    grad_buf_.assign(q2_.param_count(), 0.0);
    double loss2 = critic_loss_and_grads(q2_, obs0, act0, targets, grad_buf_);
    adam_step(q2_opt_, q2_.params(), grad_buf_);

    Eigen::MatrixXd xi(act_dim_, obs0.cols());
    for (Eigen::Index j = 0; j < xi.cols(); ++j)
      for (Eigen::Index i = 0; i < xi.rows(); ++i) xi(i, j) = normal01(gen);
    grad_buf_.assign(actor_.param_count(), 0.0);
    double actor_loss = sac_actor_loss_and_grads(actor_, head_, q1_, q2_, obs0,
                                                 xi, config_.alpha, grad_buf_);
    adam_step(actor_opt_, actor_.params(), grad_buf_);

    soft_update(target_q1_.params(), q1_.params(), config_.tau);
    soft_update(target_q2_.params(), q2_.params(), config_.tau);
    ++steps_;
    return {0.5 * (loss1 + loss2), actor_loss, true};
  }

  std::vector<std::string> save(const std::string& prefix) const override {
    std::vector<std::string> paths;
    auto dump = [&](const Mlp& net, const std::string& name) {
      Checkpoint ckpt{net.layer_sizes(), seed_, steps_,
                      {net.params().begin(), net.params().end()}};
      std::string path = prefix + name + ".ckpt";
      save_checkpoint(path, ckpt);
      paths.push_back(path);
    };
    dump(actor_, "actor");
    dump(q1_, "critic1");
    dump(q2_, "critic2");
    dump(target_q1_, "target_critic1");
    dump(target_q2_, "target_critic2");
    return paths;
  }

 private:
  AgentConfig config_;
  TargetSpec spec_;
  int obs_dim_, act_dim_;
  SquashedGaussianHead head_;
  Mlp actor_, q1_, q2_, target_q1_, target_q2_;
  AdamState actor_opt_, q1_opt_, q2_opt_;
  std::uint64_t seed_;
  std::uint64_t steps_ = 0;
  std::vector<double> grad_buf_;
};

double eval_episode(Agent& agent, const Env& env, std::uint64_t seed,
                    std::mt19937_64& gen) {
  std::unique_ptr<Env> e = env.clone();
  StateVec obs = e->reset(seed);
  int cap = e->max_episode_steps();
  if (cap <= 0) cap = 1000;
  double ret = 0.0;
  for (int t = 0; t < cap; ++t) {
    Transition tr = e->step(agent.act(obs, false, gen));
    ret += tr.reward;
    obs = tr.next_state;
    if (tr.terminated) break;
  }
  return ret;
}

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const Env& env,
                                  std::uint64_t seed) {
  validate_agent_config(config);
  if (is_sac_family(config.algo))
    return std::make_unique<SacAgent>(config, env, seed);
  return std::make_unique<DdpgAgent>(config, env, seed);
}

TrainRunResult run_training(Agent& agent, Env& env, const TrainRunOptions& opts) {
  if (opts.total_steps < 1)
    throw ContractError("run_training: total_steps must be positive");
  if (opts.eval_every < 1)
    throw ContractError("run_training: eval_every must be positive");
  if (opts.eval_episodes < 0)
    throw ContractError("run_training: eval_episodes must be nonnegative");

  const auto start = std::chrono::steady_clock::now();
  auto wall_ms = [&start] {
    return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start).count());
  };

  std::mt19937_64 gen_explore(derive_seed(opts.seed, "explore"));
  std::mt19937_64 gen_train(derive_seed(opts.seed, "train"));
  std::uint64_t episode_seeds = derive_seed(opts.seed, "episode-seeds");
  std::uint64_t eval_seeds = derive_seed(opts.seed, "eval-seeds");

  WindowBuilder builder(agent.config().window);
  RingBuffer buffer(agent.config().buffer_capacity);
  TrainRunResult out;

  const int cap = env.max_episode_steps();
  long global = 0, episode = 0, eval_counter = 0;

  while (global < opts.total_steps) {
    ++episode;
    StateVec obs = env.reset(splitmix64(episode_seeds));
    agent.begin_episode();
    builder.reset();

    double ep_return = 0.0, critic_sum = 0.0, actor_sum = 0.0;
    long ep_steps = 0, updates = 0;

    while (true) {
      ActionVec action = agent.act(obs, true, gen_explore);
      Transition tr = env.step(action);
      push_transition(builder, buffer, tr);
      if (tr.terminated) finalize_episode(builder, buffer);

      TrainResult res = agent.train_step(buffer, gen_train);
      if (res.updated) {
        critic_sum += res.critic_loss;
        actor_sum += res.actor_loss;
        ++updates;
      }

      ep_return += tr.reward;
      ++ep_steps;
      ++global;
      obs = tr.next_state;

      if (opts.eval_episodes > 0 && global % opts.eval_every == 0) {
        for (int e = 0; e < opts.eval_episodes; ++e) {
          double ret = eval_episode(agent, env, splitmix64(eval_seeds), gen_explore);
          out.eval_rows.push_back(
              {global, ++eval_counter, ret, 0.0, 0.0, wall_ms()});
        }
      }

      if (tr.terminated || (cap > 0 && ep_steps >= cap) ||
          global >= opts.total_steps)
        break;
    }

    out.train_rows.push_back({global, episode, ep_return,
                              updates ? critic_sum / updates : 0.0,
                              updates ? actor_sum / updates : 0.0, wall_ms()});
  }
  return out;
}

}  // namespace mstd
