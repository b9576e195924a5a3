#include "attnca/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "attnca/checkpoint.hpp"

namespace nca {

std::string ModelConfig::canonical_string() const {
  std::ostringstream os;
  os << "state_dim=" << state_dim << ";attention_hidden=" << attention_hidden
     << ";attention_out=" << attention_out << ";msg_hidden=" << msg_hidden << ";msg_out=" << msg_out
     << ";composition=" << static_cast<int>(composition) << ";profile=" << static_cast<int>(profile)
     << ";include_self=" << (include_self ? 1 : 0) << ";obs_dim=" << obs_dim << ";action_dim=" << action_dim;
  return os.str();
}

std::uint64_t ModelConfig::digest() const { return fnv1a64(canonical_string()); }

ModelConfig morph_model_config(bool long_range, int attention_hidden, int msg_hidden) {
  ModelConfig cfg;
  cfg.state_dim = 9;
  cfg.attention_hidden = attention_hidden;
  cfg.msg_hidden = msg_hidden;
  cfg.msg_out = 9;
  cfg.composition = long_range ? Composition::LocalPlusLrSum : Composition::LocalOnly;
  cfg.profile = UpdateProfile::ResidualRefine;
  return cfg;
}

ModelConfig lander_model_config(int attention_hidden, int msg_hidden, int msg_out) {
  ModelConfig cfg;
  cfg.state_dim = 12;
  cfg.attention_hidden = attention_hidden;
  cfg.msg_hidden = msg_hidden;
  cfg.msg_out = msg_out;
  cfg.composition = Composition::LocalLrConcat;
  cfg.profile = UpdateProfile::ProjectionHeads;
  cfg.obs_dim = 8;
  cfg.action_dim = 4;
  return cfg;
}

ModelParams make_model_params(const ModelConfig& cfg, Rng& rng) {
  if (cfg.attention_out != 1)
    throw std::invalid_argument("make_model_params: attention_out must be 1 (scalar pair scores)");
  ModelParams p;
  const std::array<int, 3> attn_dims{cfg.pair_dim(), cfg.attention_hidden, 1};
  p.attn_local = make_mlp(attn_dims, rng);
  p.attn_long = make_mlp(attn_dims, rng);
  const std::array<int, 3> msg_dims{cfg.z_dim(), cfg.msg_hidden, cfg.msg_out};
  p.msg = make_mlp(msg_dims, rng);
  p.gru = make_gru(cfg.m_dim(), cfg.gru_hidden(), rng);
  if (cfg.profile == UpdateProfile::ResidualRefine) {
    const std::array<int, 3> refine_dims{cfg.state_dim, cfg.state_dim, cfg.state_dim};
    p.refine = make_mlp(refine_dims, rng);
  } else {
    p.state_head = make_linear(cfg.gru_hidden(), cfg.state_dim, rng);
    const std::array<int, 3> act_dims{cfg.gru_hidden(), cfg.gru_hidden(), 2};
    p.act_head = make_mlp(act_dims, rng);
  }
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.attn_local = zeros_like(p.attn_local);
  z.attn_long = zeros_like(p.attn_long);
  z.msg = zeros_like(p.msg);
  z.gru = zeros_like(p.gru);
  if (!p.refine.layers.empty()) z.refine = zeros_like(p.refine);
  if (!p.state_head.w.empty()) z.state_head = zeros_like(p.state_head);
  if (!p.act_head.layers.empty()) z.act_head = zeros_like(p.act_head);
  return z;
}

std::vector<ParamRef> collect_params(ModelParams& p, const ModelConfig& cfg) {
  std::vector<ParamRef> out;
  collect_params(p.attn_local, "attn_local", out);
  collect_params(p.attn_long, "attn_long", out);
  collect_params(p.msg, "msg", out);
  collect_params(p.gru, "gru", out);
  if (cfg.profile == UpdateProfile::ResidualRefine) {
    collect_params(p.refine, "refine", out);
  } else {
    collect_params(p.state_head, "state_head", out);
    collect_params(p.act_head, "act_head", out);
  }
  return out;
}

void validate_model(const ModelParams& p, const ModelConfig& cfg) {
  auto expect = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("validate_model: ") + what);
  };
  expect(static_cast<int>(p.attn_local.in_dim()) == cfg.pair_dim(), "attn_local input dim");
  expect(p.attn_local.out_dim() == 1, "attn_local output dim");
  expect(static_cast<int>(p.attn_long.in_dim()) == cfg.pair_dim(), "attn_long input dim");
  expect(static_cast<int>(p.msg.in_dim()) == cfg.z_dim(), "msg input dim");
  expect(static_cast<int>(p.msg.out_dim()) == cfg.msg_out, "msg output dim");
  expect(static_cast<int>(p.gru.input_dim()) == cfg.m_dim(), "gru input dim");
  expect(static_cast<int>(p.gru.hidden_dim()) == cfg.gru_hidden(), "gru hidden dim");
  if (cfg.profile == UpdateProfile::ResidualRefine) {
    expect(cfg.gru_hidden() == cfg.state_dim, "residual profile needs hidden == state_dim");
    expect(static_cast<int>(p.refine.in_dim()) == cfg.state_dim &&
               static_cast<int>(p.refine.out_dim()) == cfg.state_dim,
           "refine dims");
  } else {
    expect(static_cast<int>(p.state_head.fan_in()) == cfg.gru_hidden() &&
               static_cast<int>(p.state_head.fan_out()) == cfg.state_dim,
           "state head dims");
    expect(static_cast<int>(p.act_head.in_dim()) == cfg.gru_hidden() && p.act_head.out_dim() == 2,
           "act head dims");
  }
}

namespace {

PairSet build_pairs(const std::vector<std::vector<int>>& lists, const std::vector<int>& grid_of_slot,
                    const std::vector<int>& slot_of_grid, bool skip_empty) {
  PairSet ps;
  ps.seg_start.push_back(0);
  for (std::size_t slot = 0; slot < grid_of_slot.size(); ++slot) {
    const auto& list = lists[grid_of_slot[slot]];
    if (skip_empty && list.empty()) continue;
    ps.seg_cell.push_back(static_cast<int>(slot));
    ps.center.push_back(static_cast<int>(slot));
    ps.neighbor.push_back(static_cast<int>(slot));  // self first
    for (int j : list) {
      const int nslot = slot_of_grid[j];
      if (nslot < 0) throw std::invalid_argument("build_workspace: neighbor references inactive cell");
      ps.center.push_back(static_cast<int>(slot));
      ps.neighbor.push_back(nslot);
    }
    ps.seg_start.push_back(static_cast<int>(ps.center.size()));
  }
  return ps;
}

}  // namespace

StepWorkspace build_workspace(const Topology& topo) {
  StepWorkspace ws;
  ws.grid_of_slot = topo.grid.active_cells();
  ws.n_cells = static_cast<int>(ws.grid_of_slot.size());
  ws.slot_of_grid.assign(topo.grid.active.size(), -1);
  for (int slot = 0; slot < ws.n_cells; ++slot) ws.slot_of_grid[ws.grid_of_slot[slot]] = slot;

  ws.local = build_pairs(topo.local, ws.grid_of_slot, ws.slot_of_grid, /*skip_empty=*/false);
  ws.longr = build_pairs(topo.long_range, ws.grid_of_slot, ws.slot_of_grid, /*skip_empty=*/true);

  ws.positions = Tensor(static_cast<std::size_t>(ws.n_cells), 2);
  for (int slot = 0; slot < ws.n_cells; ++slot) {
    const int cell = ws.grid_of_slot[slot];
    const int r = topo.grid.row_of(cell), c = topo.grid.col_of(cell);
    ws.positions(slot, 0) = topo.grid.rows > 1 ? static_cast<double>(r) / (topo.grid.rows - 1) : 0.5;
    ws.positions(slot, 1) = topo.grid.cols > 1 ? static_cast<double>(c) / (topo.grid.cols - 1) : 0.5;
  }

  if (topo.zones) {
    ws.has_zones = true;
    for (int slot = 0; slot < ws.n_cells; ++slot) {
      const Zone z = topo.zones->zone[ws.grid_of_slot[slot]];
      if (z != Zone::Unzoned) ws.zone_slots[static_cast<int>(z)].push_back(slot);
    }
  }
  return ws;
}

CellField make_field(const ModelConfig& cfg, const StepWorkspace& ws) {
  CellField f;
  const auto n = static_cast<std::size_t>(ws.n_cells);
  f.c = Tensor(n, static_cast<std::size_t>(cfg.state_dim));
  f.h = Tensor(n, static_cast<std::size_t>(cfg.gru_hidden()));
  if (cfg.profile == UpdateProfile::ProjectionHeads) f.prev_act.assign(n, 0);
  f.pos = ws.positions;
  return f;
}

Tensor build_extended(const ModelConfig& cfg, const CellField& field) {
  const std::size_t n = field.c.rows();
  Tensor s(n, static_cast<std::size_t>(cfg.ext_dim()));
  const int c_dim = cfg.state_dim;
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = s.row(i);
    auto src = field.c.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    if (cfg.profile == UpdateProfile::ProjectionHeads) {
      dst[c_dim] = static_cast<double>(field.prev_act[i]);
      dst[c_dim + 1] = field.pos(i, 0);
      dst[c_dim + 2] = field.pos(i, 1);
    }
  }
  return s;
}

std::vector<double> extended_state(const ModelConfig& cfg, const CellField& field, int slot) {
  std::vector<double> s(static_cast<std::size_t>(cfg.ext_dim()));
  auto src = field.c.row(static_cast<std::size_t>(slot));
  std::copy(src.begin(), src.end(), s.begin());
  if (cfg.profile == UpdateProfile::ProjectionHeads) {
    s[cfg.state_dim] = static_cast<double>(field.prev_act[slot]);
    s[cfg.state_dim + 1] = field.pos(slot, 0);
    s[cfg.state_dim + 2] = field.pos(slot, 1);
  }
  return s;
}

std::vector<double> attention_aggregate(const MlpParams& attn, const Tensor& s_all, const Tensor& values,
                                        std::span<const int> neighbors, int self_slot, bool zero_when_empty) {
  const std::size_t dim = values.cols();
  std::vector<double> out(dim, 0.0);
  if (neighbors.empty() && zero_when_empty) return out;

  std::vector<int> domain{self_slot};
  domain.insert(domain.end(), neighbors.begin(), neighbors.end());

  const std::size_t s_dim = s_all.cols();
  std::vector<double> pair(2 * s_dim);
  std::copy(s_all.row(self_slot).begin(), s_all.row(self_slot).end(), pair.begin());
  std::vector<double> scores;
  scores.reserve(domain.size());
  for (int j : domain) {
    std::copy(s_all.row(j).begin(), s_all.row(j).end(), pair.begin() + static_cast<std::ptrdiff_t>(s_dim));
    scores.push_back(mlp_forward(attn, pair)[0]);
  }
  softmax_inplace(scores);
  for (std::size_t k = 0; k < domain.size(); ++k) {
    auto v = values.row(domain[k]);
    for (std::size_t d = 0; d < dim; ++d) out[d] += scores[k] * v[d];
  }
  return out;
}

std::vector<double> compose_interaction(Composition mode, std::span<const double> s,
                                        std::span<const double> n, std::span<const double> l) {
  if (n.size() != s.size()) throw std::invalid_argument("compose_interaction: n/s size mismatch");
  std::vector<double> z(s.begin(), s.end());
  switch (mode) {
    case Composition::LocalOnly:
      z.insert(z.end(), n.begin(), n.end());
      break;
    case Composition::LocalPlusLrSum: {
      if (l.size() != n.size()) throw std::invalid_argument("compose_interaction: l/n size mismatch");
      for (std::size_t i = 0; i < n.size(); ++i) z.push_back(n[i] + l[i]);
      break;
    }
    case Composition::LocalLrConcat:
      if (l.size() != n.size()) throw std::invalid_argument("compose_interaction: l/n size mismatch");
      z.insert(z.end(), n.begin(), n.end());
      z.insert(z.end(), l.begin(), l.end());
      break;
  }
  return z;
}

std::vector<double> message_input(const ModelConfig& cfg, const MlpParams& msg, std::span<const double> z,
                                  std::span<const double> obs, std::span<const double> action_onehot) {
  if (static_cast<int>(obs.size()) != cfg.obs_dim)
    throw std::invalid_argument("message_input: observation size mismatch");
  if (static_cast<int>(action_onehot.size()) != cfg.action_dim)
    throw std::invalid_argument("message_input: action size mismatch");
  std::vector<double> m = mlp_forward(msg, z);
  m.insert(m.end(), obs.begin(), obs.end());
  m.insert(m.end(), action_onehot.begin(), action_onehot.end());
  return m;
}

namespace {

// Batched attention over a PairSet: scores from the pair MLP, per-segment
// softmax, weighted sum of neighbor extended states. Rows without a segment
// stay zero.
Tensor attention_forward(const MlpParams& attn, const PairSet& ps, const Tensor& s_all, int n_cells,
                         AttnCache* cache) {
  const std::size_t s_dim = s_all.cols();
  Tensor agg(static_cast<std::size_t>(n_cells), s_dim);
  if (ps.pairs() == 0) return agg;

  Tensor x(ps.pairs(), 2 * s_dim);
  for (std::size_t p = 0; p < ps.pairs(); ++p) {
    auto dst = x.row(p);
    auto si = s_all.row(ps.center[p]);
    auto sj = s_all.row(ps.neighbor[p]);
    std::copy(si.begin(), si.end(), dst.begin());
    std::copy(sj.begin(), sj.end(), dst.begin() + static_cast<std::ptrdiff_t>(s_dim));
  }

  Tensor scores = mlp_forward(attn, x, cache ? &cache->mlp : nullptr);
  Tensor alpha(std::vector<std::size_t>{ps.pairs()});
  for (std::size_t seg = 0; seg < ps.segments(); ++seg) {
    const int lo = ps.seg_start[seg], hi = ps.seg_start[seg + 1];
    double mx = scores[lo];
    for (int p = lo + 1; p < hi; ++p) mx = std::max(mx, scores[p]);
    double sum = 0.0;
    for (int p = lo; p < hi; ++p) {
      alpha[p] = std::exp(scores[p] - mx);
      sum += alpha[p];
    }
    auto out = agg.row(ps.seg_cell[seg]);
    for (int p = lo; p < hi; ++p) {
      alpha[p] /= sum;
      auto v = s_all.row(ps.neighbor[p]);
      for (std::size_t d = 0; d < s_dim; ++d) out[d] += alpha[p] * v[d];
    }
  }
  if (cache) cache->alpha = std::move(alpha);
  return agg;
}

void attention_backward(const MlpParams& attn, const PairSet& ps, const Tensor& s_all, const AttnCache& cache,
                        const Tensor& d_agg, Tensor& d_s_all, MlpParams& grads) {
  if (ps.pairs() == 0) return;
  const std::size_t s_dim = s_all.cols();

  Tensor d_scores(ps.pairs(), 1);
  for (std::size_t seg = 0; seg < ps.segments(); ++seg) {
    const int lo = ps.seg_start[seg], hi = ps.seg_start[seg + 1];
    auto da = d_agg.row(ps.seg_cell[seg]);
    // value route and d(alpha)
    double dot = 0.0;  // sum_q alpha_q * dalpha_q for the softmax backward
    std::vector<double> d_alpha(static_cast<std::size_t>(hi - lo));
    for (int p = lo; p < hi; ++p) {
      auto v = s_all.row(ps.neighbor[p]);
      auto dv = d_s_all.row(ps.neighbor[p]);
      double acc = 0.0;
      for (std::size_t d = 0; d < s_dim; ++d) {
        acc += da[d] * v[d];
        dv[d] += cache.alpha[p] * da[d];
      }
      d_alpha[p - lo] = acc;
      dot += cache.alpha[p] * acc;
    }
    for (int p = lo; p < hi; ++p) d_scores(p, 0) = cache.alpha[p] * (d_alpha[p - lo] - dot);
  }

  Tensor d_x = mlp_backward(attn, cache.mlp, d_scores, grads);
  for (std::size_t p = 0; p < ps.pairs(); ++p) {
    auto dx = d_x.row(p);
    auto di = d_s_all.row(ps.center[p]);
    auto dj = d_s_all.row(ps.neighbor[p]);
    for (std::size_t d = 0; d < s_dim; ++d) {
      di[d] += dx[d];
      dj[d] += dx[s_dim + d];
    }
  }
}

}  // namespace

void nca_step(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
              const CellField& in, std::span<const double> obs, std::span<const double> action_onehot,
              CellField& out, Tensor* logits, StepCache* cache) {
  if (&out == &in) throw std::invalid_argument("nca_step: out must not alias in");
  if (static_cast<int>(obs.size()) != cfg.obs_dim) throw std::invalid_argument("nca_step: obs size mismatch");
  if (static_cast<int>(action_onehot.size()) != cfg.action_dim)
    throw std::invalid_argument("nca_step: action size mismatch");
  const auto n = static_cast<std::size_t>(ws.n_cells);
  if (in.c.rows() != n || static_cast<int>(in.c.cols()) != cfg.state_dim)
    throw std::invalid_argument("nca_step: field/state shape mismatch");

  Tensor s_all = build_extended(cfg, in);
  const std::size_t s_dim = s_all.cols();

  AttnCache local_scratch, long_scratch;
  AttnCache* local_cache = cache ? &cache->local : &local_scratch;
  AttnCache* long_cache = cache ? &cache->longr : &long_scratch;

  Tensor n_agg = attention_forward(params.attn_local, ws.local, s_all, ws.n_cells, local_cache);
  Tensor l_agg(n, s_dim);
  if (cfg.composition != Composition::LocalOnly && ws.longr.pairs() > 0)
    l_agg = attention_forward(params.attn_long, ws.longr, s_all, ws.n_cells, long_cache);

  // interaction vector z
  Tensor z(n, static_cast<std::size_t>(cfg.z_dim()));
  switch (cfg.composition) {
    case Composition::LocalOnly:
      z.mat().leftCols(s_dim) = s_all.mat();
      z.mat().rightCols(s_dim) = n_agg.mat();
      break;
    case Composition::LocalPlusLrSum:
      z.mat().leftCols(s_dim) = s_all.mat();
      z.mat().rightCols(s_dim) = n_agg.mat() + l_agg.mat();
      break;
    case Composition::LocalLrConcat:
      z.mat().leftCols(s_dim) = s_all.mat();
      z.mat().middleCols(s_dim, s_dim) = n_agg.mat();
      z.mat().rightCols(s_dim) = l_agg.mat();
      break;
  }

  Tensor msg_out = mlp_forward(params.msg, z, cache ? &cache->msg : nullptr);
  Tensor m(n, static_cast<std::size_t>(cfg.m_dim()));
  m.mat().leftCols(msg_out.cols()) = msg_out.mat();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = m.row(i);
    std::size_t at = msg_out.cols();
    for (double v : obs) row[at++] = v;
    for (double v : action_onehot) row[at++] = v;
  }

  Tensor h_new = gru_step(params.gru, m, in.h, cache ? &cache->gru : nullptr);

  out.pos = in.pos;
  out.h = h_new;
  if (cfg.profile == UpdateProfile::ResidualRefine) {
    Tensor r = mlp_forward(params.refine, h_new, cache ? &cache->refine : nullptr);
    out.c = Tensor(n, static_cast<std::size_t>(cfg.state_dim));
    out.c.mat() = h_new.mat() + r.mat();
    out.prev_act = in.prev_act;
  } else {
    out.c = Tensor(n, static_cast<std::size_t>(cfg.state_dim));
    out.c.mat().noalias() = h_new.mat() * params.state_head.w.mat().transpose();
    out.c.mat().rowwise() += params.state_head.b.vec().transpose();
    Tensor act = mlp_forward(params.act_head, h_new, cache ? &cache->act : nullptr);
    out.prev_act.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) out.prev_act[i] = act(i, 1) > act(i, 0) ? 1 : 0;
    if (logits) *logits = std::move(act);
  }

  if (cache) {
    cache->s_all = std::move(s_all);
    cache->n_agg = std::move(n_agg);
    cache->l_agg = std::move(l_agg);
    cache->h_new = out.h;
  }
}

void nca_step_backward(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
                       const StepCache& cache, const Tensor& d_c_out, const Tensor& d_h_out,
                       const Tensor* d_logits, Tensor& d_c_in, Tensor& d_h_in, ModelParams& grads) {
  const auto n = static_cast<std::size_t>(ws.n_cells);
  const std::size_t s_dim = cache.s_all.cols();

  // gradient into the new hidden state
  Tensor d_h_new = d_h_out;
  if (cfg.profile == UpdateProfile::ResidualRefine) {
    d_h_new.mat() += d_c_out.mat();
    Tensor d_r = d_c_out;
    Tensor d_from_refine = mlp_backward(params.refine, cache.refine, d_r, grads.refine);
    d_h_new.mat() += d_from_refine.mat();
  } else {
    grads.state_head.w.mat().noalias() += d_c_out.mat().transpose() * cache.h_new.mat();
    grads.state_head.b.vec().noalias() += d_c_out.mat().colwise().sum().transpose();
    d_h_new.mat().noalias() += d_c_out.mat() * params.state_head.w.mat();
    if (d_logits) {
      Tensor d_from_act = mlp_backward(params.act_head, cache.act, *d_logits, grads.act_head);
      d_h_new.mat() += d_from_act.mat();
    }
  }

  Tensor d_m, d_h_prev;
  gru_backward(params.gru, cache.gru, d_h_new, d_m, d_h_prev, grads.gru);

  Tensor d_msg_out(n, static_cast<std::size_t>(cfg.msg_out));
  d_msg_out.mat() = d_m.mat().leftCols(cfg.msg_out);  // obs/action columns carry no gradient

  Tensor d_z = mlp_backward(params.msg, cache.msg, d_msg_out, grads.msg);

  Tensor d_s_all(n, s_dim);
  Tensor d_n(n, s_dim), d_l(n, s_dim);
  d_s_all.mat() = d_z.mat().leftCols(s_dim);
  switch (cfg.composition) {
    case Composition::LocalOnly:
      d_n.mat() = d_z.mat().rightCols(s_dim);
      d_l.set_zero();
      break;
    case Composition::LocalPlusLrSum:
      d_n.mat() = d_z.mat().rightCols(s_dim);
      d_l = d_n;
      break;
    case Composition::LocalLrConcat:
      d_n.mat() = d_z.mat().middleCols(s_dim, s_dim);
      d_l.mat() = d_z.mat().rightCols(s_dim);
      break;
  }

  attention_backward(params.attn_local, ws.local, cache.s_all, cache.local, d_n, d_s_all, grads.attn_local);
  if (cfg.composition != Composition::LocalOnly && ws.longr.pairs() > 0)
    attention_backward(params.attn_long, ws.longr, cache.s_all, cache.longr, d_l, d_s_all, grads.attn_long);

  // extended state: only the cell-state block is differentiable
  d_c_in = Tensor(n, static_cast<std::size_t>(cfg.state_dim));
  d_c_in.mat() = d_s_all.mat().leftCols(cfg.state_dim);
  d_h_in = std::move(d_h_prev);
}

}  // namespace nca
