#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "attnca/nn.hpp"
#include "attnca/tensor.hpp"
#include "attnca/topology.hpp"

namespace nca {

/// How the interaction vector z is assembled from the extended state s and
/// the aggregated neighborhoods n (local) and l (long-range).
enum class Composition {
  LocalOnly,        // z = [s; n]
  LocalPlusLrSum,   // z = [s; n + l]
  LocalLrConcat,    // z = [s; n; l]  (l = 0 when no long-range edges)
};

/// How the GRU hidden state turns into the next cell state.
enum class UpdateProfile {
  ResidualRefine,   // c' = h' + refine(h'); requires hidden == state_dim
  ProjectionHeads,  // c' = state_head(h'), logits = act_head(h')
};

struct ModelConfig {
  int state_dim = 9;  // C
  int attention_hidden = 64;
  int attention_out = 1;  // scalar pair score; softmax needs exactly 1
  int msg_hidden = 64;
  int msg_out = 9;
  Composition composition = Composition::LocalOnly;
  UpdateProfile profile = UpdateProfile::ResidualRefine;
  bool include_self = true;
  int obs_dim = 0;     // appended to the message input (lander: 8)
  int action_dim = 0;  // one-hot previous action appended (lander: 4)

  /// Extended-state width S. ProjectionHeads appends the previous activation
  /// bit and the 2D normalized position: S = C + 3.
  int ext_dim() const { return state_dim + (profile == UpdateProfile::ProjectionHeads ? 3 : 0); }
  int pair_dim() const { return 2 * ext_dim(); }
  int z_dim() const { return composition == Composition::LocalLrConcat ? 3 * ext_dim() : 2 * ext_dim(); }
  int m_dim() const { return msg_out + obs_dim + action_dim; }
  int gru_hidden() const { return profile == UpdateProfile::ResidualRefine ? state_dim : m_dim(); }

  std::string canonical_string() const;
  std::uint64_t digest() const;
};

/// Morphogenesis profile: C = S = 9, residual refinement, message 2S->h->C.
ModelConfig morph_model_config(bool long_range, int attention_hidden = 64, int msg_hidden = 64);
/// Control profile: C = 12, S = 15, z concatenation, readout heads,
/// message 3S->h->msg_out with observation and previous action appended.
ModelConfig lander_model_config(int attention_hidden = 64, int msg_hidden = 64, int msg_out = 45);

struct ModelParams {
  MlpParams attn_local;
  MlpParams attn_long;
  MlpParams msg;
  GruParams gru;
  MlpParams refine;         // ResidualRefine only
  LinearParams state_head;  // ProjectionHeads only
  MlpParams act_head;       // ProjectionHeads only
};

/// Fresh parameters, Xavier weights / zero biases. Initialization order is
/// fixed (attn_local, attn_long, msg, gru, then refine or heads) so a seed
/// fully determines the result.
ModelParams make_model_params(const ModelConfig& cfg, Rng& rng);
ModelParams zeros_like(const ModelParams& p);
std::vector<ParamRef> collect_params(ModelParams& p, const ModelConfig& cfg);
void validate_model(const ModelParams& p, const ModelConfig& cfg);

/// Per-cell state carried across steps. Rows index active-cell slots
/// (ascending grid index), not raw grid cells.
struct CellField {
  Tensor c;                   // N x C
  Tensor h;                   // N x gru_hidden
  std::vector<int> prev_act;  // N, {0,1}; ProjectionHeads only
  Tensor pos;                 // N x 2, fixed per run

  bool operator==(const CellField&) const = default;
};

/// Flattened attention domains: one segment per aggregating cell, the cell
/// itself first, then its neighbor list in stored order.
struct PairSet {
  std::vector<int> center;
  std::vector<int> neighbor;
  std::vector<int> seg_start;  // size segments()+1
  std::vector<int> seg_cell;
  std::size_t pairs() const { return center.size(); }
  std::size_t segments() const { return seg_cell.size(); }
};

/// Topology-derived constants shared by every step of a run.
struct StepWorkspace {
  int n_cells = 0;
  std::vector<int> grid_of_slot;
  std::vector<int> slot_of_grid;  // -1 for inactive cells
  PairSet local;
  PairSet longr;  // segments only for cells with long-range edges
  Tensor positions;
  bool has_zones = false;
  std::array<std::vector<int>, 4> zone_slots;  // indexed by Zone
};

StepWorkspace build_workspace(const Topology& topo);
CellField make_field(const ModelConfig& cfg, const StepWorkspace& ws);

struct AttnCache {
  MlpCache mlp;
  Tensor alpha;  // one weight per pair
};

struct StepCache {
  Tensor s_all;
  AttnCache local;
  AttnCache longr;
  Tensor n_agg, l_agg;
  MlpCache msg;
  GruCache gru;
  Tensor h_new;
  MlpCache refine;
  MlpCache act;
};

/// One synchronous update: every cell reads the time-t field, all write t+1.
/// `obs` and `action_onehot` are broadcast to all cells (sizes obs_dim /
/// action_dim; empty for the morphogenesis profile). `logits` (N x 2) and the
/// cache are optional. `out` must not alias `in`.
void nca_step(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
              const CellField& in, std::span<const double> obs, std::span<const double> action_onehot,
              CellField& out, Tensor* logits = nullptr, StepCache* cache = nullptr);

/// Reverse pass of one step. d_logits may be null (or for ResidualRefine is
/// ignored). Parameter gradients accumulate into `grads`; d_c_in / d_h_in are
/// overwritten.
void nca_step_backward(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
                       const StepCache& cache, const Tensor& d_c_out, const Tensor& d_h_out,
                       const Tensor* d_logits, Tensor& d_c_in, Tensor& d_h_in, ModelParams& grads);

// Per-cell reference forms of the step's building blocks. nca_step uses the
// batched equivalents; these exist as the spec-level contracts and for tests.

/// Extended state s of one cell slot.
std::vector<double> extended_state(const ModelConfig& cfg, const CellField& field, int slot);

/// Attention-weighted aggregate over {self} + neighbors. With an empty
/// neighbor list: returns values[self] when zero_when_empty is false (local
/// rule) and the zero vector when true (long-range rule).
std::vector<double> attention_aggregate(const MlpParams& attn, const Tensor& s_all, const Tensor& values,
                                        std::span<const int> neighbors, int self_slot,
                                        bool zero_when_empty = false);

std::vector<double> compose_interaction(Composition mode, std::span<const double> s,
                                        std::span<const double> n, std::span<const double> l);

/// Message input m for one cell; obs/action are required (and appended) iff
/// the config declares them.
std::vector<double> message_input(const ModelConfig& cfg, const MlpParams& msg, std::span<const double> z,
                                  std::span<const double> obs, std::span<const double> action_onehot);

/// Batched extended states (N x S).
Tensor build_extended(const ModelConfig& cfg, const CellField& field);

}  // namespace nca
