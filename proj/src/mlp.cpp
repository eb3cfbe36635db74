#include "mstd/mlp.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "mstd/rng.hpp"

namespace mstd {

Mlp::Mlp(std::vector<int> layer_sizes, Output output, Eigen::VectorXd output_scale)
    : sizes_(std::move(layer_sizes)), output_(output),
      output_scale_(std::move(output_scale)) {
  if (sizes_.size() < 2) throw ContractError("Mlp: need at least input and output");
  for (int s : sizes_)
    if (s < 1) throw ContractError("Mlp: layer sizes must be positive");
  if (output_ == Output::TanhScaled &&
      output_scale_.size() != sizes_.back())
    throw ContractError("Mlp: output_scale must match the output dimension");

  std::size_t count = 0;
  for (std::size_t k = 0; k + 1 < sizes_.size(); ++k)
    count += static_cast<std::size_t>(sizes_[k + 1]) * sizes_[k] + sizes_[k + 1];
  params_.assign(count, 0.0);
}

std::size_t Mlp::weight_offset(int layer) const {
  std::size_t off = 0;
  for (int k = 0; k < layer; ++k)
    off += static_cast<std::size_t>(sizes_[k + 1]) * sizes_[k] + sizes_[k + 1];
  return off;
}

std::size_t Mlp::bias_offset(int layer) const {
  return weight_offset(layer) +
         static_cast<std::size_t>(sizes_[layer + 1]) * sizes_[layer];
}

void Mlp::init_uniform(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
    double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[k]));
    std::size_t begin = weight_offset(static_cast<int>(k));
    std::size_t end = weight_offset(static_cast<int>(k + 1));
    for (std::size_t i = begin; i < end; ++i)
      params_[i] = uniform_range(gen, -bound, bound);
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  Cache scratch;
  return forward(input, scratch);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache& cache) const {
  if (input.rows() != sizes_.front())
    throw ContractError("Mlp::forward: input dimension mismatch");

  const int layers = static_cast<int>(sizes_.size()) - 1;
  cache.acts.assign(1, input);
  cache.acts.reserve(layers + 1);
  for (int k = 0; k < layers; ++k) {
    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + weight_offset(k),
                                        sizes_[k + 1], sizes_[k]);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + bias_offset(k),
                                        sizes_[k + 1]);
    Eigen::MatrixXd z = w * cache.acts.back();
    z.colwise() += b;
    if (k + 1 < layers) {
      cache.acts.push_back(z.cwiseMax(0.0));
    } else if (output_ == Output::Identity) {
      cache.acts.push_back(std::move(z));
    } else {
      cache.tanh_vals = z.array().tanh();
      cache.acts.push_back(cache.tanh_vals.array().colwise() *
                           output_scale_.array());
    }
  }
  cache.valid = true;
  return cache.acts.back();
}

void Mlp::backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                   std::span<double> param_grads,
                   Eigen::MatrixXd* input_grads) const {
  if (!cache.valid) throw ContractError("Mlp::backward: stale forward cache");
  const int layers = static_cast<int>(sizes_.size()) - 1;
  if (cache.acts.size() != static_cast<std::size_t>(layers) + 1)
    throw ContractError("Mlp::backward: cache does not match this net");
  if (upstream.rows() != sizes_.back() ||
      upstream.cols() != cache.acts.back().cols())
    throw ContractError("Mlp::backward: upstream gradient shape mismatch");
  if (!param_grads.empty() && param_grads.size() != params_.size())
    throw ContractError("Mlp::backward: param_grads has the wrong size");

  // Gradient with respect to the last pre-activation.
  Eigen::MatrixXd g;
  if (output_ == Output::Identity) {
    g = upstream;
  } else {
    g = upstream.array() * (1.0 - cache.tanh_vals.array().square());
    g = g.array().colwise() * output_scale_.array();
  }

  for (int k = layers - 1; k >= 0; --k) {
    if (!param_grads.empty()) {
      Eigen::Map<Eigen::MatrixXd> wg(param_grads.data() + weight_offset(k),
                                     sizes_[k + 1], sizes_[k]);
      Eigen::Map<Eigen::VectorXd> bg(param_grads.data() + bias_offset(k),
                                     sizes_[k + 1]);
      wg.noalias() += g * cache.acts[k].transpose();
      bg.noalias() += g.rowwise().sum();
    }
    if (k == 0 && !input_grads) break;

    Eigen::Map<const Eigen::MatrixXd> w(params_.data() + weight_offset(k),
                                        sizes_[k + 1], sizes_[k]);
    Eigen::MatrixXd h = w.transpose() * g;
    if (k == 0) {
      *input_grads = std::move(h);
    } else {
      g = h.array() * (cache.acts[k].array() > 0.0).cast<double>();
    }
  }
}

AdamState::AdamState(std::size_t param_count, double learning_rate)
    : lr(learning_rate), m(param_count, 0.0), v(param_count, 0.0) {
  if (!(learning_rate > 0.0)) throw ContractError("AdamState: lr must be positive");
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads) {
  if (params.size() != state.m.size() || grads.size() != state.m.size())
    throw ContractError("adam_step: size mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    double mhat = state.m[i] / c1;
    double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

void soft_update(std::span<double> target, std::span<const double> online,
                 double tau) {
  if (target.size() != online.size()) throw ContractError("soft_update: size mismatch");
  if (!(tau > 0.0 && tau <= 1.0))
    throw ContractError("soft_update: tau must lie in (0,1]");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

OuNoise::OuNoise(int dim, double mu, double theta, double sigma, double dt)
    : mu_(mu), theta_(theta), sigma_(sigma), dt_(dt) {
  if (dim < 1) throw ContractError("OuNoise: dim must be positive");
  x_.assign(dim, mu_);
}

void OuNoise::reset() { x_.assign(x_.size(), mu_); }

const std::vector<double>& OuNoise::sample(std::mt19937_64& gen) {
  const double root_dt = std::sqrt(dt_);
  for (double& x : x_)
    x += theta_ * (mu_ - x) * dt_ + sigma_ * root_dt * normal01(gen);
  return x_;
}

SquashedGaussianHead::SquashedGaussianHead(Eigen::VectorXd action_scale,
                                           double log_std_min, double log_std_max)
    : scale_(std::move(action_scale)),
      log_std_min_(log_std_min), log_std_max_(log_std_max) {
  if (scale_.size() < 1) throw ContractError("SquashedGaussianHead: empty scale");
  if (!(log_std_min_ < log_std_max_))
    throw ContractError("SquashedGaussianHead: bad log-std clamp");
  if ((scale_.array() <= 0.0).any())
    throw ContractError("SquashedGaussianHead: scale entries must be positive");
}

namespace {

// log(1 + e^z) without overflow for large |z|.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

}  // namespace

SquashedGaussianHead::Result SquashedGaussianHead::transform(
    const Eigen::MatrixXd& head_out, const Eigen::MatrixXd& xi,
    Cache& cache) const {
  const int dim = action_dim();
  if (head_out.rows() != 2 * dim)
    throw ContractError("SquashedGaussianHead: head output must have 2A rows");
  if (xi.rows() != dim || xi.cols() != head_out.cols())
    throw ContractError("SquashedGaussianHead: noise shape mismatch");
  const auto n = head_out.cols();

  Eigen::MatrixXd mu = head_out.topRows(dim);
  Eigen::MatrixXd s_raw = head_out.bottomRows(dim);
  cache.clamp_mask = ((s_raw.array() >= log_std_min_) &&
                      (s_raw.array() <= log_std_max_)).cast<double>();
  Eigen::MatrixXd s = s_raw.array().max(log_std_min_).min(log_std_max_);

  cache.xi = xi;
  cache.sigma = s.array().exp();
  Eigen::MatrixXd u = mu.array() + cache.sigma.array() * xi.array();
  cache.tanh_u = u.array().tanh();
  cache.valid = true;

  Result res;
  res.actions = cache.tanh_u.array().colwise() * scale_.array();

  const double log_2pi = std::log(2.0 * M_PI);
  const double log_2 = std::log(2.0);
  res.log_probs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double lp = 0.0;
    for (int i = 0; i < dim; ++i) {
      double z = xi(i, j);
      lp += -0.5 * log_2pi - s(i, j) - 0.5 * z * z - std::log(scale_(i));
      // log(1 - tanh(u)^2) in a form that never sees 1 - 1.
      lp -= 2.0 * (log_2 - u(i, j) - softplus(-2.0 * u(i, j)));
    }
    res.log_probs(j) = lp;
  }
  return res;
}

SquashedGaussianHead::Result SquashedGaussianHead::sample(
    const Eigen::MatrixXd& head_out, std::mt19937_64& gen, Cache& cache) const {
  Eigen::MatrixXd xi(action_dim(), head_out.cols());
  for (Eigen::Index j = 0; j < xi.cols(); ++j)
    for (Eigen::Index i = 0; i < xi.rows(); ++i) xi(i, j) = normal01(gen);
  return transform(head_out, xi, cache);
}

Eigen::MatrixXd SquashedGaussianHead::mean_action(
    const Eigen::MatrixXd& head_out) const {
  const int dim = action_dim();
  if (head_out.rows() != 2 * dim)
    throw ContractError("SquashedGaussianHead: head output must have 2A rows");
  return head_out.topRows(dim).array().tanh().colwise() * scale_.array();
}

Eigen::MatrixXd SquashedGaussianHead::backward(
    const Cache& cache, const Eigen::MatrixXd& d_actions,
    const Eigen::VectorXd& d_log_probs) const {
  if (!cache.valid) throw ContractError("SquashedGaussianHead: stale cache");
  const int dim = action_dim();
  const auto n = cache.xi.cols();
  if (d_actions.size() != 0 && (d_actions.rows() != dim || d_actions.cols() != n))
    throw ContractError("SquashedGaussianHead: d_actions shape mismatch");
  if (d_log_probs.size() != 0 && d_log_probs.size() != n)
    throw ContractError("SquashedGaussianHead: d_log_probs shape mismatch");

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(2 * dim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double dlp = d_log_probs.size() ? d_log_probs(j) : 0.0;
    for (int i = 0; i < dim; ++i) {
      double t = cache.tanh_u(i, j);
      double sx = cache.sigma(i, j) * cache.xi(i, j);
      double da = d_actions.size() ? d_actions(i, j) : 0.0;
      double through_u = da * scale_(i) * (1.0 - t * t) + dlp * 2.0 * t;
      grad(i, j) = through_u;
      grad(dim + i, j) = (through_u * sx - dlp) * cache.clamp_mask(i, j);
    }
  }
  return grad;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.layer_sizes.size()));
  for (int s : ckpt.layer_sizes)
    detail::put_u32(out, static_cast<std::uint32_t>(s));
  detail::put_u64(out, ckpt.seed);
  detail::put_u64(out, ckpt.step);
  detail::put_u64(out, ckpt.params.size());
  for (double p : ckpt.params) detail::put_f64(out, p);
  if (!out) throw ConfigError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  Checkpoint ckpt;
  std::uint32_t n_layers = detail::get_u32(in);
  if (!in || n_layers > 64) throw ConfigError("bad checkpoint header: " + path);
  ckpt.layer_sizes.resize(n_layers);
  for (auto& s : ckpt.layer_sizes) s = static_cast<int>(detail::get_u32(in));
  ckpt.seed = detail::get_u64(in);
  ckpt.step = detail::get_u64(in);
  std::uint64_t count = detail::get_u64(in);
  if (!in) throw ConfigError("truncated checkpoint header: " + path);
  ckpt.params.resize(count);
  for (auto& p : ckpt.params) p = detail::get_f64(in);
  if (!in) throw ConfigError("truncated checkpoint data: " + path);
  return ckpt;
}

}  // namespace mstd
