#pragma once

#include <cstdint>
#include <vector>

#include "attnca/tensor.hpp"

namespace nca {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;    // decoupled, applied as p -= lr * wd * p
  double grad_clip_norm = 0.0;  // 0 disables clipping
};

/// Adam with optional global-norm gradient clipping and decoupled weight
/// decay. Per update, in order: clip the whole gradient collection to
/// grad_clip_norm, shrink parameters by lr*weight_decay, then the standard
/// bias-corrected Adam step. Throws on non-finite gradients.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads);

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_count_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

/// Scales all tensors so their joint L2 norm is at most max_norm (no-op when
/// max_norm <= 0 or the norm is already below it). Returns the pre-clip norm.
double clip_global_norm(const std::vector<ParamRef>& grads, double max_norm);

}  // namespace nca
