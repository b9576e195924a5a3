#pragma once

#include <functional>
#include <vector>

#include "attnca/tensor.hpp"

namespace nca {

/// Central-difference gradient of a deterministic scalar loss with respect to
/// every coordinate of every tensor in `params`. The loss closure must read
/// the live parameter values each call. Throws if the loss is non-finite at
/// any probe point.
std::vector<Tensor> finite_diff_grad(const std::function<double()>& loss_fn,
                                     const std::vector<ParamRef>& params, double eps);

/// Worst relative error between a reverse-mode gradient collection and a
/// finite-difference one: |a-b| / max(|a|, |b|, floor).
double max_relative_error(const std::vector<ParamRef>& analytic, const std::vector<Tensor>& reference,
                          double denom_floor = 1e-6);

}  // namespace nca
