#include "attnca/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace nca {

std::vector<Tensor> finite_diff_grad(const std::function<double()>& loss_fn,
                                     const std::vector<ParamRef>& params, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    Tensor g = p.tensor->like_zeros();
    for (std::size_t k = 0; k < p.tensor->size(); ++k) {
      double& theta = (*p.tensor)[k];
      const double saved = theta;
      theta = saved + eps;
      const double lp = loss_fn();
      theta = saved - eps;
      const double lm = loss_fn();
      theta = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw std::runtime_error("finite_diff_grad: non-finite loss at probe point for " + p.name);
      g[k] = (lp - lm) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_relative_error(const std::vector<ParamRef>& analytic, const std::vector<Tensor>& reference,
                          double denom_floor) {
  if (analytic.size() != reference.size())
    throw std::invalid_argument("max_relative_error: collection size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const Tensor& a = *analytic[i].tensor;
    const Tensor& b = reference[i];
    if (!a.same_shape(b)) throw std::invalid_argument("max_relative_error: shape mismatch at " + analytic[i].name);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double denom = std::max({std::abs(a[k]), std::abs(b[k]), denom_floor});
      worst = std::max(worst, std::abs(a[k] - b[k]) / denom);
    }
  }
  return worst;
}

}  // namespace nca
