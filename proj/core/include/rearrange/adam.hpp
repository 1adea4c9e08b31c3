#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rearrange/tensor.hpp"

namespace rearrange::ad {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam moments for a fixed list of parameter tensors.
class AdamState {
 public:
  AdamState(std::span<const Tensor> params, AdamConfig cfg = {});

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  /// One update in place. Throws ValidationError on shape mismatch and
  /// NumericError on non-finite gradients (parameters are left untouched).
  void step(std::span<Tensor> params, std::span<const Tensor> grads);

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

inline void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  state.step(params, grads);
}

}  // namespace rearrange::ad
