#include "attnca/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nca {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_dims(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch, got " +
                                std::to_string(got) + ", expected " + std::to_string(want));
}
}  // namespace

double gelu(double x) { return x * 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) throw std::invalid_argument("empty softmax domain");
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

Tensor mlp_forward(const MlpParams& p, const Tensor& x, MlpCache* cache) {
  check_dims(x.cols(), p.in_dim(), "mlp_forward");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Tensor cur = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LinearParams& layer = p.layers[l];
    check_dims(cur.cols(), layer.fan_in(), "mlp_forward layer");
    if (cache) cache->inputs.push_back(cur);
    Tensor out(cur.rows(), layer.fan_out());
    out.mat().noalias() = cur.mat() * layer.w.mat().transpose();
    out.mat().rowwise() += layer.b.vec().transpose();
    const bool last = (l + 1 == p.layers.size());
    if (!last) {
      if (cache) cache->pre.push_back(out);
      for (double& v : out.values()) v = gelu(v);
    }
    cur = std::move(out);
  }
  return cur;
}

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> x) {
  Tensor in(1, x.size());
  std::copy(x.begin(), x.end(), in.data());
  Tensor out = mlp_forward(p, in);
  return {out.data(), out.data() + out.size()};
}

Tensor mlp_backward(const MlpParams& p, const MlpCache& cache, const Tensor& d_out, MlpParams& grads) {
  Tensor d_cur = d_out;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const LinearParams& layer = p.layers[l];
    const bool last = (l + 1 == p.layers.size());
    if (!last) {
      // d through GELU at the cached pre-activation
      const Tensor& pre = cache.pre[l];
      for (std::size_t i = 0; i < d_cur.size(); ++i) d_cur[i] *= gelu_grad(pre[i]);
    }
    LinearParams& g = grads.layers[l];
    const Tensor& in = cache.inputs[l];
    g.w.mat().noalias() += d_cur.mat().transpose() * in.mat();
    g.b.vec().noalias() += d_cur.mat().colwise().sum().transpose();
    Tensor d_in(in.rows(), in.cols());
    d_in.mat().noalias() = d_cur.mat() * layer.w.mat();
    d_cur = std::move(d_in);
  }
  return d_cur;
}

Tensor gru_step(const GruParams& p, const Tensor& m, const Tensor& h_prev, GruCache* cache) {
  check_dims(m.cols(), p.input_dim(), "gru_step input");
  check_dims(h_prev.cols(), p.hidden_dim(), "gru_step hidden");
  check_dims(h_prev.rows(), m.rows(), "gru_step batch");
  const std::size_t batch = m.rows();
  const std::size_t hidden = p.hidden_dim();

  Tensor z(batch, hidden), r(batch, hidden), rh(batch, hidden), hc(batch, hidden);
  z.mat().noalias() = m.mat() * p.update.wx.mat().transpose() + h_prev.mat() * p.update.wh.mat().transpose();
  z.mat().rowwise() += p.update.b.vec().transpose();
  r.mat().noalias() = m.mat() * p.reset.wx.mat().transpose() + h_prev.mat() * p.reset.wh.mat().transpose();
  r.mat().rowwise() += p.reset.b.vec().transpose();
  for (double& v : z.values()) v = sigmoid(v);
  for (double& v : r.values()) v = sigmoid(v);

  rh.mat() = r.mat().cwiseProduct(h_prev.mat());
  hc.mat().noalias() = m.mat() * p.cand.wx.mat().transpose() + rh.mat() * p.cand.wh.mat().transpose();
  hc.mat().rowwise() += p.cand.b.vec().transpose();
  for (double& v : hc.values()) v = std::tanh(v);

  Tensor h_new(batch, hidden);
  h_new.mat() = (RowMat::Ones(batch, hidden) - z.mat()).cwiseProduct(h_prev.mat()) + z.mat().cwiseProduct(hc.mat());

  if (cache) {
    cache->m = m;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->rh = std::move(rh);
    cache->hc = std::move(hc);
  }
  return h_new;
}

std::vector<double> gru_step(const GruParams& p, std::span<const double> m, std::span<const double> h_prev) {
  Tensor mt(1, m.size()), ht(1, h_prev.size());
  std::copy(m.begin(), m.end(), mt.data());
  std::copy(h_prev.begin(), h_prev.end(), ht.data());
  Tensor out = gru_step(p, mt, ht);
  return {out.data(), out.data() + out.size()};
}

void gru_backward(const GruParams& p, const GruCache& c, const Tensor& d_h_new,
                  Tensor& d_m, Tensor& d_h_prev, GruParams& grads) {
  const std::size_t batch = c.m.rows();
  const std::size_t hidden = p.hidden_dim();
  const std::size_t input = p.input_dim();

  d_m = Tensor(batch, input);
  d_h_prev = Tensor(batch, hidden);

  // h' = (1-z).h + z.hc
  Tensor d_z(batch, hidden), d_hc(batch, hidden);
  d_z.mat() = d_h_new.mat().cwiseProduct(c.hc.mat() - c.h_prev.mat());
  d_hc.mat() = d_h_new.mat().cwiseProduct(c.z.mat());
  d_h_prev.mat() = d_h_new.mat().cwiseProduct(RowMat::Ones(batch, hidden) - c.z.mat());

  // candidate: hc = tanh(Wh m + Uh rh + bh)
  Tensor d_ac(batch, hidden);
  d_ac.mat() = d_hc.mat().cwiseProduct(RowMat::Ones(batch, hidden) - c.hc.mat().cwiseProduct(c.hc.mat()));
  grads.cand.wx.mat().noalias() += d_ac.mat().transpose() * c.m.mat();
  grads.cand.wh.mat().noalias() += d_ac.mat().transpose() * c.rh.mat();
  grads.cand.b.vec().noalias() += d_ac.mat().colwise().sum().transpose();
  d_m.mat().noalias() += d_ac.mat() * p.cand.wx.mat();
  Tensor d_rh(batch, hidden);
  d_rh.mat().noalias() = d_ac.mat() * p.cand.wh.mat();
  Tensor d_r(batch, hidden);
  d_r.mat() = d_rh.mat().cwiseProduct(c.h_prev.mat());
  d_h_prev.mat() += d_rh.mat().cwiseProduct(c.r.mat());

  // reset gate: r = sigmoid(.)
  Tensor d_ar(batch, hidden);
  d_ar.mat() = d_r.mat().cwiseProduct(c.r.mat().cwiseProduct(RowMat::Ones(batch, hidden) - c.r.mat()));
  grads.reset.wx.mat().noalias() += d_ar.mat().transpose() * c.m.mat();
  grads.reset.wh.mat().noalias() += d_ar.mat().transpose() * c.h_prev.mat();
  grads.reset.b.vec().noalias() += d_ar.mat().colwise().sum().transpose();
  d_m.mat().noalias() += d_ar.mat() * p.reset.wx.mat();
  d_h_prev.mat().noalias() += d_ar.mat() * p.reset.wh.mat();

  // update gate: z = sigmoid(.)
  Tensor d_az(batch, hidden);
  d_az.mat() = d_z.mat().cwiseProduct(c.z.mat().cwiseProduct(RowMat::Ones(batch, hidden) - c.z.mat()));
  grads.update.wx.mat().noalias() += d_az.mat().transpose() * c.m.mat();
  grads.update.wh.mat().noalias() += d_az.mat().transpose() * c.h_prev.mat();
  grads.update.b.vec().noalias() += d_az.mat().colwise().sum().transpose();
  d_m.mat().noalias() += d_az.mat() * p.update.wx.mat();
  d_h_prev.mat().noalias() += d_az.mat() * p.update.wh.mat();
}

Tensor xavier_uniform_init(int fan_in, int fan_out, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("xavier_uniform_init: non-positive dimension");
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w(static_cast<std::size_t>(fan_out), static_cast<std::size_t>(fan_in));
  for (double& v : w.values()) v = rng.uniform(-a, a);
  return w;
}

MlpParams make_mlp(std::span<const int> dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output dims");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    LinearParams layer;
    layer.w = xavier_uniform_init(dims[i], dims[i + 1], rng);
    layer.b = Tensor::vector(static_cast<std::size_t>(dims[i + 1]));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

GruParams make_gru(int input_dim, int hidden_dim, Rng& rng) {
  auto gate = [&](void) {
    GruGate g;
    g.wx = xavier_uniform_init(input_dim, hidden_dim, rng);
    g.wh = xavier_uniform_init(hidden_dim, hidden_dim, rng);
    g.b = Tensor::vector(static_cast<std::size_t>(hidden_dim));
    return g;
  };
  GruParams p;
  p.update = gate();
  p.reset = gate();
  p.cand = gate();
  return p;
}

LinearParams make_linear(int fan_in, int fan_out, Rng& rng) {
  LinearParams p;
  p.w = xavier_uniform_init(fan_in, fan_out, rng);
  p.b = Tensor::vector(static_cast<std::size_t>(fan_out));
  return p;
}

MlpParams zeros_like(const MlpParams& p) {
  MlpParams z;
  for (const auto& layer : p.layers) z.layers.push_back({layer.w.like_zeros(), layer.b.like_zeros()});
  return z;
}

GruParams zeros_like(const GruParams& p) {
  auto gate = [](const GruGate& g) { return GruGate{g.wx.like_zeros(), g.wh.like_zeros(), g.b.like_zeros()}; };
  return GruParams{gate(p.update), gate(p.reset), gate(p.cand)};
}

LinearParams zeros_like(const LinearParams& p) { return {p.w.like_zeros(), p.b.like_zeros()}; }

void collect_params(MlpParams& p, const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    out.push_back({prefix + ".l" + std::to_string(l) + ".w", &p.layers[l].w});
    out.push_back({prefix + ".l" + std::to_string(l) + ".b", &p.layers[l].b});
  }
}

void collect_params(GruParams& p, const std::string& prefix, std::vector<ParamRef>& out) {
  auto gate = [&](GruGate& g, const char* name) {
    out.push_back({prefix + "." + name + ".wx", &g.wx});
    out.push_back({prefix + "." + name + ".wh", &g.wh});
    out.push_back({prefix + "." + name + ".b", &g.b});
  };
  gate(p.update, "update");
  gate(p.reset, "reset");
  gate(p.cand, "cand");
}

void collect_params(LinearParams& p, const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w", &p.w});
  out.push_back({prefix + ".b", &p.b});
}

}  // namespace nca
