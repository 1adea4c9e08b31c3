#include "rearrange/adam.hpp"

#include <cmath>
#include <string>

#include "rearrange/error.hpp"

namespace rearrange::ad {

AdamState::AdamState(std::span<const Tensor> params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor& p : params) {
    m_.emplace_back(p.shape(), 0.0);
    v_.emplace_back(p.shape(), 0.0);
  }
}

void AdamState::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ValidationError("adam: expected " + std::to_string(m_.size()) + " parameter/gradient pairs");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != m_[i].shape() || grads[i].shape() != m_[i].shape()) {
      throw ValidationError("adam: shape mismatch for parameter " + std::to_string(i));
    }
    if (!grads[i].all_finite()) throw NumericError("adam: non-finite gradient for parameter " + std::to_string(i));
  }

  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

}  // namespace rearrange::ad
