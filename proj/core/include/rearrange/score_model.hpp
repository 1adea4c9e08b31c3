#pragma once

// Noise-conditioned graph score network and its denoising score-matching
// training loop.
//
// Node features are [c_in(t) * position, one-hot colour, fourier(log t)].
// Two edge-convolution rounds aggregate messages from every ordered pair
// (self included) by mean, then a linear head emits a 2-vector per node.
// The head output is an estimate of -z, so the score is head / std(t).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rearrange/rng.hpp"
#include "rearrange/targets.hpp"
#include "rearrange/tensor.hpp"
#include "rearrange/vec2.hpp"
#include "rearrange/world.hpp"

namespace rearrange::score {

using world::BallState;

struct SdeKernel {
  double sigma = 25.0;

  /// (sigma^(2t) - 1) / (2 ln sigma).
  double variance(double t) const;
  double stddev(double t) const;
  void validate() const;

  friend bool operator==(const SdeKernel&, const SdeKernel&) = default;
};

struct ModelConfig {
  int n_colors = 3;
  int hidden = 64;
  /// Total Fourier features; half sines, half cosines.
  int fourier_dim = 16;
  std::uint64_t fourier_seed = 0;
  double sigma = 25.0;
  double t_min = 1e-3;

  int feature_dim() const { return 2 + n_colors + fourier_dim; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class ScoreModel {
 public:
  /// Fresh model with weights drawn from (init_seed, init stream).
  ScoreModel(ModelConfig cfg, std::uint64_t init_seed);
  /// Model from stored weights; shapes are checked against cfg.
  ScoreModel(ModelConfig cfg, std::vector<ad::Tensor> params);

  const ModelConfig& config() const { return cfg_; }
  SdeKernel kernel() const { return SdeKernel{cfg_.sigma}; }
  const std::vector<ad::Tensor>& parameters() const { return params_; }
  std::vector<ad::Tensor>& parameters() { return params_; }
  /// Expected shape of every parameter tensor, in storage order.
  std::vector<ad::Shape> parameter_shapes() const;
  const std::vector<double>& fourier_frequencies() const { return freqs_; }

  /// Node features for a batch of equal-size states, shape [B*K, F].
  ad::Tensor features(std::span<const BallState> states, std::span<const double> ts) const;
  /// Traced forward from features: head output of shape [B*K, 2].
  ad::Var trace(std::span<const ad::Var> params, ad::Var features, std::size_t group) const;

  /// Estimated score field at noise level t. Any K >= 2.
  Field score(const BallState& state, double t) const;

 private:
  void check_t(double t) const;

  ModelConfig cfg_;
  std::vector<ad::Tensor> params_;
  std::vector<double> freqs_;
};

struct Perturbed {
  BallState noisy;
  Field true_score;
  /// Standard-normal draw that produced `noisy`.
  Field z;
};

/// noisy = state + std(t) * z, true score = -(noisy - state) / variance(t).
Perturbed perturb(const BallState& state, double t, const SdeKernel& kernel, Rng& rng, double t_min = 1e-3);

struct DsmBatch {
  std::vector<BallState> noisy;
  std::vector<double> t;
  /// Stacked z, shape [B*K, 2].
  ad::Tensor z;
};

/// B examples drawn uniformly with replacement, t ~ U[t_min, 1].
DsmBatch make_dsm_batch(std::span<const BallState> examples, int batch_size, const SdeKernel& kernel, double t_min,
                        Rng& rng);

/// mean_b ||head(noisy_b, t_b) + z_b||^2, which equals
/// mean_b variance(t_b) * ||score - true score||^2. When `grads` is given it
/// receives one gradient per parameter.
double dsm_batch_loss(const ScoreModel& model, const DsmBatch& batch, std::vector<ad::Tensor>* grads = nullptr);

using FieldFn = std::function<Field(const BallState&, double)>;

/// Monte Carlo DSM loss of an arbitrary field over `states` (one t and z per
/// state).
double dsm_loss(const FieldFn& field, std::span<const BallState> states, const SdeKernel& kernel, Rng& rng,
                double t_min = 1e-3);
double dsm_loss(const ScoreModel& model, std::span<const BallState> states, Rng& rng);

struct TrainConfig {
  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 2e-4;
  double t_min = 1e-3;
  std::uint64_t rng_seed = 0;
  int hidden = 64;
  double sigma = 25.0;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
  ScoreModel model;
  std::vector<double> loss_history;
};

using TrainCallback = std::function<void(int step, double loss)>;

/// Adam on the DSM objective. Throws NumericError with the failing step on
/// divergence.
TrainResult train(const targets::TargetDataset& dataset, const TrainConfig& cfg, const TrainCallback& on_step = {});

}  // namespace rearrange::score
