#include "rearrange/score_model.hpp"

#include <cmath>
#include <string>

#include "rearrange/error.hpp"

namespace rearrange::score {

namespace {

// Rough variance of target positions; keeps c_in(t) * position near unit
// scale at every noise level.
constexpr double kDataVariance = 0.04;
constexpr int kLayers = 2;

}  // namespace

double SdeKernel::variance(double t) const {
  return (std::pow(sigma, 2.0 * t) - 1.0) / (2.0 * std::log(sigma));
}

double SdeKernel::stddev(double t) const { return std::sqrt(variance(t)); }

void SdeKernel::validate() const {
  if (!(sigma > 1.0) || !std::isfinite(sigma)) throw ValidationError("kernel sigma must be finite and > 1");
}

void ModelConfig::validate() const {
  if (n_colors < 1) throw ValidationError("model n_colors must be positive");
  if (hidden < 1) throw ValidationError("model hidden width must be positive");
  if (fourier_dim < 2 || fourier_dim % 2 != 0) throw ValidationError("fourier_dim must be a positive even number");
  if (!(t_min > 0.0 && t_min < 1.0)) throw ValidationError("t_min must lie in (0, 1)");
  SdeKernel{sigma}.validate();
}

ScoreModel::ScoreModel(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_rng(init_seed, streams::kInit, 0);
  for (const ad::Shape& shape : parameter_shapes()) {
    ad::Tensor p(shape, 0.0);
    if (shape.size() == 2) {
      const double s = 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (double& v : p.data()) v = s * standard_normal(rng);
    }
    params_.push_back(std::move(p));
  }
  Rng frng = make_rng(cfg_.fourier_seed, streams::kInit, 1);
  freqs_.resize(static_cast<std::size_t>(cfg_.fourier_dim / 2));
  for (double& w : freqs_) w = standard_normal(frng);
}

ScoreModel::ScoreModel(ModelConfig cfg, std::vector<ad::Tensor> params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  const auto shapes = parameter_shapes();
  if (params_.size() != shapes.size()) {
    throw ValidationError("score model expects " + std::to_string(shapes.size()) + " parameter tensors, got " +
                          std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params_[i].shape() != shapes[i]) {
      throw ValidationError("parameter " + std::to_string(i) + " has shape " + ad::shape_to_string(params_[i].shape()) +
                            ", expected " + ad::shape_to_string(shapes[i]));
    }
    if (!params_[i].all_finite()) throw ValidationError("parameter " + std::to_string(i) + " is not finite");
  }
  Rng frng = make_rng(cfg_.fourier_seed, streams::kInit, 1);
  freqs_.resize(static_cast<std::size_t>(cfg_.fourier_dim / 2));
  for (double& w : freqs_) w = standard_normal(frng);
}

std::vector<ad::Shape> ScoreModel::parameter_shapes() const {
  const std::size_t f = static_cast<std::size_t>(cfg_.feature_dim());
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  std::vector<ad::Shape> shapes{{f, h}, {h}};
  for (int l = 0; l < kLayers; ++l) {
    // self weight, neighbour weight, edge bias, update weight, update bias
    shapes.insert(shapes.end(), {{h, h}, {h, h}, {h}, {h, h}, {h}});
  }
  shapes.insert(shapes.end(), {{h, 2}, {2}});
  return shapes;
}

void ScoreModel::check_t(double t) const {
  if (!(t >= cfg_.t_min && t <= 1.0)) {
    throw ValidationError("noise level " + std::to_string(t) + " outside [" + std::to_string(cfg_.t_min) + ", 1]");
  }
}

ad::Tensor ScoreModel::features(std::span<const BallState> states, std::span<const double> ts) const {
  if (states.empty() || states.size() != ts.size()) throw ValidationError("features: need one t per state");
  const std::size_t k = states.front().size();
  const std::size_t f = static_cast<std::size_t>(cfg_.feature_dim());
  const std::size_t nf = freqs_.size();
  const SdeKernel kern = kernel();
  ad::Tensor out({states.size() * k, f}, 0.0);
  for (std::size_t b = 0; b < states.size(); ++b) {
    const BallState& s = states[b];
    if (s.size() != k || s.categories.size() != k) throw ValidationError("features: states differ in ball count");
    check_t(ts[b]);
    const double c_in = 1.0 / std::sqrt(kern.variance(ts[b]) + kDataVariance);
    const double lt = std::log(ts[b]);
    for (std::size_t i = 0; i < k; ++i) {
      double* row = out.data().data() + (b * k + i) * f;
      row[0] = c_in * s.positions[i].x;
      row[1] = c_in * s.positions[i].y;
      const int c = s.categories[i];
      if (c < 0 || c >= cfg_.n_colors) throw ValidationError("category " + std::to_string(c) + " out of range");
      row[2 + c] = 1.0;
      double* fr = row + 2 + cfg_.n_colors;
      for (std::size_t q = 0; q < nf; ++q) {
        fr[q] = std::sin(freqs_[q] * lt);
        fr[nf + q] = std::cos(freqs_[q] * lt);
      }
    }
  }
  return out;
}

ad::Var ScoreModel::trace(std::span<const ad::Var> p, ad::Var x, std::size_t group) const {
  std::size_t q = 0;
  ad::Var hcur = ad::silu(ad::add_bias(ad::matmul(x, p[q]), p[q + 1]));
  q += 2;
  for (int l = 0; l < kLayers; ++l) {
    ad::Var a = ad::matmul(hcur, p[q]);
    ad::Var b = ad::matmul(hcur, p[q + 1]);
    ad::Var agg = ad::edge_mean_silu(a, b, p[q + 2], group);
    hcur = ad::add(hcur, ad::silu(ad::add_bias(ad::matmul(agg, p[q + 3]), p[q + 4])));
    q += 5;
  }
  return ad::add_bias(ad::matmul(hcur, p[q]), p[q + 1]);
}

Field ScoreModel::score(const BallState& state, double t) const {
  if (state.size() < 1) throw ValidationError("score: empty state");
  check_t(t);
  ad::Tape tape;
  std::vector<ad::Var> p;
  p.reserve(params_.size());
  for (const ad::Tensor& w : params_) p.push_back(tape.constant(w));
  const double ts[1] = {t};
  ad::Var x = tape.constant(features(std::span<const BallState>(&state, 1), ts));
  const ad::Tensor& out = trace(p, x, state.size()).value();
  const double inv_std = 1.0 / kernel().stddev(t);
  Field g(state.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = {inv_std * out[2 * i], inv_std * out[2 * i + 1]};
  return g;
}

}  // namespace rearrange::score
