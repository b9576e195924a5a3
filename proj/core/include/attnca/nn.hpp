#pragma once

#include <span>
#include <vector>

#include "attnca/rng.hpp"
#include "attnca/tensor.hpp"

namespace nca {

/// Exact GELU, x * Phi(x) with the Gaussian CDF via erf (not the tanh
/// approximation).
double gelu(double x);
/// d/dx gelu(x) = Phi(x) + x * phi(x).
double gelu_grad(double x);

/// Numerically stable softmax (max subtraction). Throws on empty input.
std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

/// One dense layer, weight stored fan_out x fan_in, bias length fan_out.
struct LinearParams {
  Tensor w;
  Tensor b;
  std::size_t fan_in() const { return w.cols(); }
  std::size_t fan_out() const { return w.rows(); }
};

/// MLP with GELU between layers and a linear final layer.
struct MlpParams {
  std::vector<LinearParams> layers;
  std::size_t in_dim() const { return layers.front().fan_in(); }
  std::size_t out_dim() const { return layers.back().fan_out(); }
};

struct MlpCache {
  std::vector<Tensor> inputs;  // input to each layer, batch x fan_in
  std::vector<Tensor> pre;     // pre-activation of each hidden layer
};

/// Batched forward: X is batch x in_dim, result batch x out_dim.
Tensor mlp_forward(const MlpParams& p, const Tensor& x, MlpCache* cache = nullptr);
/// Single-vector convenience wrapper.
std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> x);
/// Accumulates parameter gradients into `grads` and returns dL/dX.
Tensor mlp_backward(const MlpParams& p, const MlpCache& cache, const Tensor& d_out, MlpParams& grads);

/// One GRU gate: a = wx * m + wh * h + b (wx: hidden x input, wh: hidden x hidden).
struct GruGate {
  Tensor wx;
  Tensor wh;
  Tensor b;
};

struct GruParams {
  GruGate update;  // z
  GruGate reset;   // r
  GruGate cand;    // h-tilde
  std::size_t input_dim() const { return update.wx.cols(); }
  std::size_t hidden_dim() const { return update.wx.rows(); }
};

struct GruCache {
  Tensor m;       // input, batch x input_dim
  Tensor h_prev;  // batch x hidden
  Tensor z, r, rh, hc;
};

/// Standard GRU step, batched over rows:
///   z = sigmoid(Wz m + Uz h + bz), r = sigmoid(Wr m + Ur h + br),
///   hc = tanh(Wh m + Uh (r.h) + bh), h' = (1-z).h + z.hc
Tensor gru_step(const GruParams& p, const Tensor& m, const Tensor& h_prev, GruCache* cache = nullptr);
std::vector<double> gru_step(const GruParams& p, std::span<const double> m, std::span<const double> h_prev);
void gru_backward(const GruParams& p, const GruCache& cache, const Tensor& d_h_new,
                  Tensor& d_m, Tensor& d_h_prev, GruParams& grads);

/// Weight matrix fan_out x fan_in with entries i.i.d. uniform on [-a, a],
/// a = sqrt(6 / (fan_in + fan_out)), filled in row-major storage order.
Tensor xavier_uniform_init(int fan_in, int fan_out, Rng& rng);

/// Xavier weights, zero biases. `dims` chains layer sizes, e.g. {18, 64, 9}.
MlpParams make_mlp(std::span<const int> dims, Rng& rng);
/// Gate init order: update, reset, cand; within a gate wx then wh (biases zero).
GruParams make_gru(int input_dim, int hidden_dim, Rng& rng);
LinearParams make_linear(int fan_in, int fan_out, Rng& rng);

MlpParams zeros_like(const MlpParams& p);
GruParams zeros_like(const GruParams& p);
LinearParams zeros_like(const LinearParams& p);

void collect_params(MlpParams& p, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(GruParams& p, const std::string& prefix, std::vector<ParamRef>& out);
void collect_params(LinearParams& p, const std::string& prefix, std::vector<ParamRef>& out);

}  // namespace nca
