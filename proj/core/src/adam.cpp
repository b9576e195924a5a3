#include "attnca/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace nca {

double clip_global_norm(const std::vector<ParamRef>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.tensor->squared_norm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& g : grads)
      for (double& v : g.tensor->values()) v *= scale;
  }
  return norm;
}

void AdamState::step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: params/grads count mismatch");
  if (first_moment_.empty()) {
    for (const auto& p : params) {
      first_moment_.push_back(p.tensor->like_zeros());
      second_moment_.push_back(p.tensor->like_zeros());
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].tensor->same_shape(*grads[i].tensor))
      throw std::invalid_argument("adam: grad shape mismatch for " + params[i].name);
    if (!grads[i].tensor->all_finite())
      throw std::runtime_error("non-finite gradient in " + grads[i].name);
  }

  clip_global_norm(grads, cfg_.grad_clip_norm);

  if (cfg_.weight_decay > 0.0) {
    const double shrink = cfg_.learning_rate * cfg_.weight_decay;
    for (const auto& p : params)
      for (double& v : p.tensor->values()) v -= shrink * v;
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    const Tensor& g = *grads[i].tensor;
    Tensor& m = first_moment_[i];
    Tensor& v = second_moment_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

}  // namespace nca
