#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mstd/errors.hpp"

namespace mstd {

/// Fully connected net with ReLU hidden layers. Output is either raw linear
/// (critics) or tanh scaled per dimension (deterministic actors). Parameters
/// live in one flat vector (layer order, column-major weights then bias) so
/// the optimizer, soft updates and checkpoints can treat them uniformly.
///
/// Matrices hold one sample per column: a batch of N inputs is dim x N.
class Mlp {
 public:
  enum class Output { Identity, TanhScaled };

  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Output output = Output::Identity,
      Eigen::VectorXd output_scale = {});

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Per-layer uniform init in +-1/sqrt(fan_in), weights then bias, in flat
  /// storage order. Deterministic given the seed.
  void init_uniform(std::uint64_t seed);

  struct Cache {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts.back() = output
    Eigen::MatrixXd tanh_vals;          // pre-scale tanh, TanhScaled only
    bool valid = false;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;

  /// Reverse pass for the batch last seen by forward(input, cache).
  /// upstream is dLoss/dOutput with the output's shape. Parameter gradients
  /// are accumulated into param_grads (pass an empty span to skip); input
  /// gradients are written to input_grads when given.
  void backward(const Cache& cache, const Eigen::MatrixXd& upstream,
                std::span<double> param_grads,
                Eigen::MatrixXd* input_grads = nullptr) const;

 private:
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

  std::vector<int> sizes_;
  Output output_ = Output::Identity;
  Eigen::VectorXd output_scale_;
  std::vector<double> params_;
};

/// Adam with bias correction. One state per parameter vector.
struct AdamState {
  AdamState() = default;
  AdamState(std::size_t param_count, double learning_rate);

  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m, v;
};

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads);

/// target <- (1 - tau) * target + tau * online, elementwise.
void soft_update(std::span<double> target, std::span<const double> online,
                 double tau);

/// Ornstein-Uhlenbeck exploration noise, one value per action dimension.
class OuNoise {
 public:
  OuNoise(int dim, double mu = 0.0, double theta = 0.2, double sigma = 0.3,
          double dt = 1.0);

  void reset();
  /// x <- x + theta (mu - x) dt + sigma sqrt(dt) xi, returns the new x.
  const std::vector<double>& sample(std::mt19937_64& gen);
  const std::vector<double>& value() const { return x_; }

 private:
  double mu_, theta_, sigma_, dt_;
  std::vector<double> x_;
};

/// Squashed-Gaussian policy head for the stochastic actor. The actor net
/// emits 2A rows per sample: means on top, log-stds below. Sampling squashes
/// a reparameterized draw through tanh and scales to the action bounds;
/// log-densities carry the tanh Jacobian correction.
class SquashedGaussianHead {
 public:
  explicit SquashedGaussianHead(Eigen::VectorXd action_scale,
                                double log_std_min = -20.0,
                                double log_std_max = 2.0);

  int action_dim() const { return static_cast<int>(scale_.size()); }

  struct Result {
    Eigen::MatrixXd actions;    // A x N
    Eigen::VectorXd log_probs;  // N
  };

  struct Cache {
    Eigen::MatrixXd xi, sigma, tanh_u;
    Eigen::MatrixXd clamp_mask;  // 1 where the log-std clamp is inactive
    bool valid = false;
  };

  /// Deterministic reparameterized transform for a fixed noise draw xi
  /// (A x N). head_out is the actor output (2A x N).
  Result transform(const Eigen::MatrixXd& head_out, const Eigen::MatrixXd& xi,
                   Cache& cache) const;

  /// Draws xi from the generator, then transforms. Column-major draw order.
  Result sample(const Eigen::MatrixXd& head_out, std::mt19937_64& gen,
                Cache& cache) const;

  /// Mean action without noise: scale * tanh(mu). Used for evaluation.
  Eigen::MatrixXd mean_action(const Eigen::MatrixXd& head_out) const;

  /// Chain rule back to the actor output. d_actions is A x N (may be empty
  /// for log-prob-only objectives), d_log_probs is N.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_actions,
                           const Eigen::VectorXd& d_log_probs) const;

 private:
  Eigen::VectorXd scale_;
  double log_std_min_, log_std_max_;
};

/// Single-network checkpoint: layer sizes, seed and step in the header,
/// then the flat parameter array, all little-endian.
struct Checkpoint {
  std::vector<int> layer_sizes;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::vector<double> params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mstd
