#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnca/lander_env.hpp"
#include "attnca/model.hpp"
#include "attnca/run_record.hpp"

namespace nca {

enum class LanderCondition { Vanilla, VanillaLr, TShape, TShapeLr };
std::string to_string(LanderCondition c);
LanderCondition lander_condition_from_string(const std::string& s);

struct ControlConfig {
  LanderCondition condition = LanderCondition::Vanilla;
  std::uint64_t seed = 42;
  int n_steps = 3;  // internal updates per environment step
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double logit_noise_std = 0.125;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double grad_clip = 1.0;
  int max_episodes = 10000;
  int eval_interval = 50;
  /// Success bar on the external reward scale; only meaningful through an
  /// external-environment adapter.
  double success_reward = 260.0;
  /// Built-in-environment bar. 0 means: calibrate as the 90th-percentile
  /// scripted-controller reward and record it in the run metadata.
  double builtin_success_reward = 0.0;
  int calibration_episodes = 100;
  bool normalize_returns = true;
  int truncation_len = 0;  // 0 = backprop through the whole episode
  int targets_per_zone = 6;
  int attention_hidden = 64;
  int msg_hidden = 64;
  int msg_out = 45;
  EnvConfig env;

  std::map<std::string, std::string> echo() const;
  std::uint64_t digest() const;
};

/// Condition topologies: Vanilla = full 16x16 grid with quadrant zones,
/// TShape = gen_t_shape(8); +Lr adds patch-based cross-zone wiring seeded
/// from the run seed. Local neighborhoods are radius-1 Moore.
Topology make_lander_topology(LanderCondition condition, int targets_per_zone, std::uint64_t seed);

/// Softmax-weighted mean of the fire logit per action zone, ordered
/// [NOOP, LEFT, MAIN, RIGHT]. Throws if any zone is empty.
std::array<double, 4> region_logits(const Tensor& cell_logits, const StepWorkspace& ws);
/// d(loss)/d(cell_logits) given d(loss)/d(region logits); accumulates.
void region_logits_backward(const Tensor& cell_logits, const StepWorkspace& ws,
                            const std::array<double, 4>& d_region, Tensor& d_cell_logits);

struct ActionSample {
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
  std::array<double, 4> probs{};
};

/// Training mode: perturb logits with i.i.d. Normal(0, noise_std) (recorded
/// in *noise_out), then sample from the softmax policy; log-prob and entropy
/// come from the perturbed distribution. Evaluation mode: no noise, greedy
/// argmax. Draw order: 4 normals (training only), then one uniform.
ActionSample select_action(const std::array<double, 4>& logits, Rng& rng, bool training,
                           double noise_std, std::array<double, 4>* noise_out = nullptr);

/// Discounted returns by backward recursion, optionally normalized to zero
/// mean / unit std over the episode (std floor 1e-8).
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma, bool normalize);

struct ControlStepTrace {
  CellField field_before;  // state at the start of the environment step
  std::array<double, 8> obs{};
  std::array<double, 4> u_prev{};
  std::array<double, 4> logits{};  // region logits, pre-noise
  std::array<double, 4> noise{};
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
  double reward = 0.0;
};

struct EpisodeTrace {
  std::vector<ControlStepTrace> steps;
  double total_reward = 0.0;
  Outcome outcome = Outcome::Flying;
  int length() const { return static_cast<int>(steps.size()); }
};

/// REINFORCE objective of a recorded episode:
///   -sum_t log pi(a_t) * R_t - beta * sum_t H(pi_t).
double reinforce_loss(const EpisodeTrace& trace, double beta, double gamma = 0.99, bool normalize = true);

/// `n_steps` internal updates with the same broadcast observation and
/// previous action; region logits come from the last update's cell logits.
/// `field` is advanced in place.
std::array<double, 4> control_step(const ModelParams& params, const ModelConfig& cfg,
                                   const ControlConfig& ctrl, const StepWorkspace& ws, CellField& field,
                                   const std::array<double, 8>& obs, const std::array<double, 4>& u_prev,
                                   Tensor* final_logits = nullptr);

/// Rolls one episode. Training mode records everything needed to replay or
/// differentiate the episode; evaluation mode runs greedy and leaves the
/// parameters untouched.
EpisodeTrace run_control_episode(const ModelParams& params, const ModelConfig& cfg, const ControlConfig& ctrl,
                                 const StepWorkspace& ws, Environment& env, std::uint64_t episode_seed,
                                 Rng& policy_rng, bool training);

/// Backpropagation of the REINFORCE loss through every internal update of
/// every environment step (or the last truncation_len steps when configured).
/// Per-step activations are recomputed from the stored field checkpoints.
void control_episode_backward(const ModelParams& params, const ModelConfig& cfg, const ControlConfig& ctrl,
                              const StepWorkspace& ws, const EpisodeTrace& trace, ModelParams& grads);

/// The same loss as a pure function of the parameters, replaying a frozen
/// episode (fixed actions, noise, observations and rewards). Used by the
/// finite-difference gradient check.
double replay_reinforce_loss(const ModelParams& params, const ModelConfig& cfg, const ControlConfig& ctrl,
                             const StepWorkspace& ws, const EpisodeTrace& frozen);

struct TrainCurvePoint {
  int episode = 0;
  double train_reward = 0.0;
  std::optional<double> eval_reward;
  double loss = 0.0;
  double entropy_mean = 0.0;
};

struct LanderTrainResult {
  RunRecord record;
  ModelParams params;
  ModelConfig model_cfg;
  std::vector<TrainCurvePoint> curve;
};

LanderTrainResult train_lander(const ControlConfig& cfg);

/// Mean total reward of a uniform-random policy, the acceptance baseline.
double random_policy_mean_reward(const EnvConfig& cfg, int n_episodes, std::uint64_t seed);

std::string curve_csv(const std::vector<TrainCurvePoint>& curve);

}  // namespace nca
