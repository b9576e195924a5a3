#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attnca/model.hpp"
#include "attnca/run_record.hpp"

namespace nca {

/// Three-class target: 0 background ('.'), 1 boundary ('#'), 2 feature ('o').
struct TargetPattern {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> labels;  // row-major

  int count_of(int cls) const;
  bool operator==(const TargetPattern&) const = default;
};

/// Parses the plain-text pattern format: one line per row, characters from
/// {'.', '#', 'o'}. All three classes must be present.
TargetPattern parse_pattern(const std::string& text);
TargetPattern load_pattern(const std::filesystem::path& path);
std::string pattern_text(const TargetPattern& p);

/// Bundled reference targets (identical to the files shipped under data/).
const TargetPattern& smiley16();
const TargetPattern& smiley8();

enum class MorphCondition { V3, LR3, V5, LR5 };
std::string to_string(MorphCondition c);
MorphCondition morph_condition_from_string(const std::string& s);
int condition_radius(MorphCondition c);      // 1 or 2
bool condition_long_range(MorphCondition c);

struct MorphConfig {
  MorphCondition condition = MorphCondition::V3;
  std::uint64_t seed = 42;
  int steps = 35;
  double success_threshold = 0.98;
  int max_episodes = 5000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double grad_clip = 0.0;                  // morphogenesis trains unclipped
  double init_std = 0.31622776601683794;   // sqrt(0.1): N(0, 0.1) read as variance
  int attention_hidden = 64;
  int msg_hidden = 64;
  // long-range generation (LR conditions)
  double zipf_exponent = 2.0;
  int hub_count = 0;  // 0 = ceil(active/25)
  int max_out_degree = 6;
  TargetPattern pattern;  // empty = smiley16

  std::map<std::string, std::string> echo() const;
  std::uint64_t digest() const;
};

/// Entries i.i.d. Normal(0, stddev^2).
Tensor init_cell_states(Rng& rng, std::size_t n, std::size_t c, double stddev);

/// Softmax over the first three channels; class = argmax, lowest index wins
/// ties.
std::pair<int, std::array<double, 3>> decode_phenotype(std::span<const double> cell_state);

/// Per-slot target labels for a pattern laid over the workspace's grid.
std::vector<std::uint8_t> slot_targets(const TargetPattern& pattern, const StepWorkspace& ws);

/// Mean cross-entropy of the decoded class distribution at the final step.
double morph_loss(const Tensor& c, std::span<const std::uint8_t> targets);
/// dL/dc, nonzero only in the three visible channels.
Tensor morph_loss_grad(const Tensor& c, std::span<const std::uint8_t> targets);
/// Fraction of cells whose decoded class matches the target.
double morph_accuracy(const Tensor& c, std::span<const std::uint8_t> targets);

struct MorphEpisode {
  std::vector<CellField> fields;  // steps+1 states, fields[0] = initial
  double loss = 0.0;
  double accuracy = 0.0;
};

/// One developmental episode: random init, `steps` synchronous updates, loss
/// and accuracy at the final step.
MorphEpisode run_morph_episode(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
                               std::span<const std::uint8_t> targets, int steps, Rng& rng, double init_std);

/// Backpropagation through all steps of a recorded episode; per-step caches
/// are recomputed from the stored fields. Gradients accumulate into `grads`.
void morph_episode_backward(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
                            const MorphEpisode& episode, std::span<const std::uint8_t> targets,
                            ModelParams& grads);

struct MorphTrainResult {
  RunRecord record;
  ModelParams params;
  ModelConfig model_cfg;
  std::vector<double> loss_trace;
  std::vector<double> accuracy_trace;
};

/// Full training run for one (condition, seed): Xavier-initialized model,
/// episode loop with Adam updates, early stop at the first episode whose
/// accuracy reaches the threshold (no update is applied for that episode).
MorphTrainResult train_morph(const MorphConfig& cfg);

}  // namespace nca
