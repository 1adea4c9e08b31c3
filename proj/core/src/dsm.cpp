#include <cmath>
#include <string>

#include "rearrange/adam.hpp"
#include "rearrange/error.hpp"
#include "rearrange/score_model.hpp"

namespace rearrange::score {

namespace {

void check_range(double t, double t_min) {
  if (!(t >= t_min && t <= 1.0)) {
    throw ValidationError("noise level " + std::to_string(t) + " outside [" + std::to_string(t_min) + ", 1]");
  }
}

}  // namespace

Perturbed perturb(const BallState& state, double t, const SdeKernel& kernel, Rng& rng, double t_min) {
  check_range(t, t_min);
  const double var = kernel.variance(t);
  const double sd = std::sqrt(var);
  Perturbed out;
  out.noisy = state;
  out.z.resize(state.size());
  out.true_score.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    Vec2 z{standard_normal(rng), standard_normal(rng)};
    out.z[i] = z;
    out.noisy.positions[i] += sd * z;
    out.true_score[i] = -(out.noisy.positions[i] - state.positions[i]) / var;
  }
  return out;
}

DsmBatch make_dsm_batch(std::span<const BallState> examples, int batch_size, const SdeKernel& kernel, double t_min,
                        Rng& rng) {
  if (examples.empty()) throw ValidationError("dsm batch: no examples");
  if (batch_size < 1) throw ValidationError("dsm batch: batch size must be positive");
  const std::size_t k = examples.front().size();
  std::uniform_int_distribution<std::size_t> pick(0, examples.size() - 1);
  DsmBatch batch;
  batch.z = ad::Tensor({static_cast<std::size_t>(batch_size) * k, 2});
  for (int b = 0; b < batch_size; ++b) {
    const BallState& s = examples[pick(rng)];
    if (s.size() != k) throw ValidationError("dsm batch: examples differ in ball count");
    const double t = uniform(rng, t_min, 1.0);
    Perturbed p = perturb(s, t, kernel, rng, t_min);
    for (std::size_t i = 0; i < k; ++i) {
      batch.z[(b * k + i) * 2] = p.z[i].x;
      batch.z[(b * k + i) * 2 + 1] = p.z[i].y;
    }
    batch.noisy.push_back(std::move(p.noisy));
    batch.t.push_back(t);
  }
  return batch;
}

double dsm_batch_loss(const ScoreModel& model, const DsmBatch& batch, std::vector<ad::Tensor>* grads) {
  if (batch.noisy.empty()) throw ValidationError("dsm loss: empty batch");
  ad::Tape tape;
  std::vector<ad::Var> p;
  p.reserve(model.parameters().size());
  for (const ad::Tensor& w : model.parameters()) p.push_back(grads ? tape.leaf(w) : tape.constant(w));
  ad::Var x = tape.constant(model.features(batch.noisy, batch.t));
  ad::Var out = model.trace(p, x, batch.noisy.front().size());
  ad::Var resid = ad::add(out, tape.constant(batch.z));
  ad::Var loss = ad::scale(ad::sum_squares(resid), 1.0 / static_cast<double>(batch.noisy.size()));
  const double value = loss.value()[0];
  if (grads) {
    tape.backward(loss);
    grads->clear();
    for (const ad::Var& v : p) grads->push_back(v.grad());
  }
  return value;
}

double dsm_loss(const FieldFn& field, std::span<const BallState> states, const SdeKernel& kernel, Rng& rng,
                double t_min) {
  if (states.empty()) throw ValidationError("dsm loss: empty batch");
  double total = 0.0;
  for (const BallState& s : states) {
    const double t = uniform(rng, t_min, 1.0);
    Perturbed p = perturb(s, t, kernel, rng, t_min);
    const Field phi = field(p.noisy, t);
    double err = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) err += norm_sq(phi[i] - p.true_score[i]);
    total += kernel.variance(t) * err;
  }
  const double loss = total / static_cast<double>(states.size());
  if (!std::isfinite(loss)) throw NumericError("dsm loss is not finite");
  return loss;
}

double dsm_loss(const ScoreModel& model, std::span<const BallState> states, Rng& rng) {
  return dsm_loss([&model](const BallState& s, double t) { return model.score(s, t); }, states, model.kernel(), rng,
                  model.config().t_min);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (steps < 1) throw ValidationError("steps must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(t_min > 0.0 && t_min < 1.0)) throw ValidationError("t_min must lie in (0, 1)");
  if (hidden < 1) throw ValidationError("hidden width must be positive");
  SdeKernel{sigma}.validate();
}

TrainResult train(const targets::TargetDataset& dataset, const TrainConfig& cfg, const TrainCallback& on_step) {
  cfg.validate();
  if (dataset.examples.empty()) throw ValidationError("train: empty dataset");

  ModelConfig mcfg;
  mcfg.n_colors = dataset.task.world.n_colors;
  mcfg.hidden = cfg.hidden;
  mcfg.fourier_seed = cfg.rng_seed;
  mcfg.sigma = cfg.sigma;
  mcfg.t_min = cfg.t_min;
  TrainResult result{ScoreModel(mcfg, cfg.rng_seed), {}};
  result.loss_history.reserve(static_cast<std::size_t>(cfg.steps));

  ad::AdamState adam(result.model.parameters(), ad::AdamConfig{.learning_rate = cfg.learning_rate});
  Rng rng = make_rng(cfg.rng_seed, streams::kTraining);
  const SdeKernel kernel{cfg.sigma};
  std::vector<ad::Tensor> grads;
  for (int step = 0; step < cfg.steps; ++step) {
    const DsmBatch batch = make_dsm_batch(dataset.examples, cfg.batch_size, kernel, cfg.t_min, rng);
    double loss = 0.0;
    try {
      loss = dsm_batch_loss(result.model, batch, &grads);
      adam.step(result.model.parameters(), grads);
    } catch (const NumericError& e) {
      const std::string last =
          result.loss_history.empty() ? "none" : std::to_string(result.loss_history.back());
      throw NumericError("training diverged at step " + std::to_string(step) + " (last loss " + last + "): " + e.what());
    }
    result.loss_history.push_back(loss);
    if (on_step) on_step(step, loss);
  }
  return result;
}

}  // namespace rearrange::score
