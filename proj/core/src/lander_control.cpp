#include "attnca/lander_control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "attnca/adam.hpp"
#include "attnca/checkpoint.hpp"

namespace nca {

namespace {
constexpr std::uint64_t kTopologyStream = 1;
constexpr std::uint64_t kParamStream = 2;
constexpr std::uint64_t kPolicyStream = 4;
constexpr double kRegionEps = 1e-8;

std::array<double, 4> onehot(int action) {
  std::array<double, 4> u{};
  u[static_cast<std::size_t>(action)] = 1.0;
  return u;
}
}  // namespace

std::string to_string(LanderCondition c) {
  switch (c) {
    case LanderCondition::Vanilla: return "vanilla";
    case LanderCondition::VanillaLr: return "vanilla-lr";
    case LanderCondition::TShape: return "tshape";
    case LanderCondition::TShapeLr: return "tshape-lr";
  }
  return "?";
}

LanderCondition lander_condition_from_string(const std::string& s) {
  if (s == "vanilla") return LanderCondition::Vanilla;
  if (s == "vanilla-lr" || s == "vanilla_lr") return LanderCondition::VanillaLr;
  if (s == "tshape") return LanderCondition::TShape;
  if (s == "tshape-lr" || s == "tshape_lr") return LanderCondition::TShapeLr;
  throw std::invalid_argument("unknown lander condition: " + s);
}

std::map<std::string, std::string> ControlConfig::echo() const {
  std::map<std::string, std::string> m = env.echo();
  m["task"] = "lander";
  m["condition"] = to_string(condition);
  m["seed"] = std::to_string(seed);
  m["n_steps"] = std::to_string(n_steps);
  m["gamma"] = std::to_string(gamma);
  m["entropy_coef"] = std::to_string(entropy_coef);
  m["logit_noise_std"] = std::to_string(logit_noise_std);
  m["learning_rate"] = std::to_string(learning_rate);
  m["beta1"] = std::to_string(beta1);
  m["beta2"] = std::to_string(beta2);
  m["weight_decay"] = std::to_string(weight_decay);
  m["grad_clip"] = std::to_string(grad_clip);
  m["max_episodes"] = std::to_string(max_episodes);
  m["eval_interval"] = std::to_string(eval_interval);
  m["success_reward"] = std::to_string(success_reward);
  m["builtin_success_reward"] = std::to_string(builtin_success_reward);
  m["calibration_episodes"] = std::to_string(calibration_episodes);
  m["normalize_returns"] = normalize_returns ? "1" : "0";
  m["truncation_len"] = std::to_string(truncation_len);
  m["targets_per_zone"] = std::to_string(targets_per_zone);
  m["attention_hidden"] = std::to_string(attention_hidden);
  m["msg_hidden"] = std::to_string(msg_hidden);
  m["msg_out"] = std::to_string(msg_out);
  return m;
}

std::uint64_t ControlConfig::digest() const {
  std::string s;
  for (const auto& [k, v] : echo()) s += k + "=" + v + "\n";
  return fnv1a64(s);
}

Topology make_lander_topology(LanderCondition condition, int targets_per_zone, std::uint64_t seed) {
  Topology topo;
  if (condition == LanderCondition::Vanilla || condition == LanderCondition::VanillaLr) {
    topo.grid = build_grid(16, 16);
    topo.zones = quadrant_zones(topo.grid);
  } else {
    auto [grid, zones] = gen_t_shape(8);
    topo.grid = std::move(grid);
    topo.zones = std::move(zones);
  }
  topo.local = moore_neighbors(topo.grid, 1);
  topo.long_range.assign(topo.grid.active.size(), {});
  if (condition == LanderCondition::VanillaLr || condition == LanderCondition::TShapeLr) {
    Rng rng(mix_seed(seed, kTopologyStream));
    topo.long_range = gen_patch_longrange(topo.grid, *topo.zones, targets_per_zone, rng);
  }
  return topo;
}

std::array<double, 4> region_logits(const Tensor& cell_logits, const StepWorkspace& ws) {
  if (!ws.has_zones) throw std::invalid_argument("region_logits: workspace has no zones");
  std::array<double, 4> out{};
  for (int z = 0; z < 4; ++z) {
    const auto& slots = ws.zone_slots[z];
    if (slots.empty()) throw std::invalid_argument("region_logits: empty zone " + std::to_string(z));
    double weight_sum = 0.0, weighted = 0.0;
    for (int i : slots) {
      const double noop = cell_logits(i, 0), fire = cell_logits(i, 1);
      const double w = 1.0 / (1.0 + std::exp(noop - fire));  // softmax fire probability
      weight_sum += w;
      weighted += w * fire;
    }
    out[z] = weighted / (weight_sum + kRegionEps);
  }
  return out;
}

void region_logits_backward(const Tensor& cell_logits, const StepWorkspace& ws,
                            const std::array<double, 4>& d_region, Tensor& d_cell_logits) {
  for (int z = 0; z < 4; ++z) {
    const auto& slots = ws.zone_slots[z];
    double weight_sum = 0.0, weighted = 0.0;
    for (int i : slots) {
      const double w = 1.0 / (1.0 + std::exp(cell_logits(i, 0) - cell_logits(i, 1)));
      weight_sum += w;
      weighted += w * cell_logits(i, 1);
    }
    const double denom = weight_sum + kRegionEps;
    const double value = weighted / denom;
    for (int i : slots) {
      const double fire = cell_logits(i, 1);
      const double w = 1.0 / (1.0 + std::exp(cell_logits(i, 0) - cell_logits(i, 1)));
      const double dw = w * (1.0 - w);  // dw/dfire; dw/dnoop is its negation
      const double d_fire = (w + dw * (fire - value)) / denom;
      const double d_noop = -dw * (fire - value) / denom;
      d_cell_logits(i, 1) += d_region[z] * d_fire;
      d_cell_logits(i, 0) += d_region[z] * d_noop;
    }
  }
}

ActionSample select_action(const std::array<double, 4>& logits, Rng& rng, bool training,
                           double noise_std, std::array<double, 4>* noise_out) {
  std::array<double, 4> perturbed = logits;
  std::array<double, 4> noise{};
  if (training) {
    for (int k = 0; k < 4; ++k) {
      noise[k] = rng.normal(0.0, noise_std);
      perturbed[k] += noise[k];
    }
  }
  if (noise_out) *noise_out = noise;

  auto probs_vec = softmax(std::span<const double>(perturbed.data(), 4));
  ActionSample s;
  std::copy(probs_vec.begin(), probs_vec.end(), s.probs.begin());

  if (training) {
    const double u = rng.uniform();
    double cum = 0.0;
    s.action = 3;
    for (int k = 0; k < 4; ++k) {
      cum += s.probs[k];
      if (u < cum) {
        s.action = k;
        break;
      }
    }
  } else {
    s.action = 0;
    for (int k = 1; k < 4; ++k)
      if (s.probs[k] > s.probs[s.action]) s.action = k;
  }

  s.log_prob = std::log(std::max(s.probs[s.action], 1e-300));
  s.entropy = 0.0;
  for (double p : s.probs)
    if (p > 0.0) s.entropy -= p * std::log(p);
  return s;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma, bool normalize) {
  if (rewards.empty()) throw std::invalid_argument("discounted_returns: empty reward sequence");
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    returns[t] = acc;
  }
  if (normalize) {
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double var = 0.0;
    for (double r : returns) var += (r - mean) * (r - mean);
    var /= static_cast<double>(returns.size());
    const double denom = std::max(std::sqrt(var), 1e-8);
    for (double& r : returns) r = (r - mean) / denom;
  }
  return returns;
}

double reinforce_loss(const EpisodeTrace& trace, double beta, double gamma, bool normalize) {
  std::vector<double> rewards;
  rewards.reserve(trace.steps.size());
  for (const auto& s : trace.steps) rewards.push_back(s.reward);
  const auto returns = discounted_returns(rewards, gamma, normalize);
  double loss = 0.0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t)
    loss += -trace.steps[t].log_prob * returns[t] - beta * trace.steps[t].entropy;
  return loss;
}

std::array<double, 4> control_step(const ModelParams& params, const ModelConfig& cfg,
                                   const ControlConfig& ctrl, const StepWorkspace& ws, CellField& field,
                                   const std::array<double, 8>& obs, const std::array<double, 4>& u_prev,
                                   Tensor* final_logits) {
  Tensor logits;
  for (int k = 0; k < ctrl.n_steps; ++k) {
    CellField next = make_field(cfg, ws);
    nca_step(params, cfg, ws, field, obs, u_prev, next, &logits);
    field = std::move(next);
  }
  if (final_logits) *final_logits = logits;
  return region_logits(logits, ws);
}

EpisodeTrace run_control_episode(const ModelParams& params, const ModelConfig& cfg, const ControlConfig& ctrl,
                                 const StepWorkspace& ws, Environment& env, std::uint64_t episode_seed,
                                 Rng& policy_rng, bool training) {
  EpisodeTrace trace;
  auto obs = env.reset(episode_seed);
  CellField field = make_field(cfg, ws);
  std::array<double, 4> u_prev = onehot(static_cast<int>(LanderAction::Noop));

  for (;;) {
    ControlStepTrace st;
    st.field_before = field;
    st.obs = obs;
    st.u_prev = u_prev;
    st.logits = control_step(params, cfg, ctrl, ws, field, obs, u_prev);
    const ActionSample sample =
        select_action(st.logits, policy_rng, training, ctrl.logit_noise_std, &st.noise);
    st.action = sample.action;
    st.log_prob = sample.log_prob;
    st.entropy = sample.entropy;

    const StepResult result = env.step(sample.action);
    st.reward = result.reward;
    trace.total_reward += result.reward;
    trace.steps.push_back(std::move(st));

    obs = result.observation;
    u_prev = onehot(sample.action);
    if (result.done) {
      trace.outcome = result.outcome;
      break;
    }
  }
  return trace;
}

namespace {

// d(loss)/d(region logits) for one step of the REINFORCE objective with the
// perturbed policy pi = softmax(L + noise):
//   d(-log pi[a] * R)/dL_k = R * (pi_k - [k == a])
//   d(-beta * H)/dL_k      = beta * pi_k * (log pi_k + H)
std::array<double, 4> policy_logit_grad(const std::array<double, 4>& logits, const std::array<double, 4>& noise,
                                        int action, double ret, double beta) {
  std::array<double, 4> perturbed;
  for (int k = 0; k < 4; ++k) perturbed[k] = logits[k] + noise[k];
  const auto pi = softmax(std::span<const double>(perturbed.data(), 4));
  double entropy = 0.0;
  for (double p : pi)
    if (p > 0.0) entropy -= p * std::log(p);
  std::array<double, 4> d{};
  for (int k = 0; k < 4; ++k) {
    const double logp = std::log(std::max(pi[k], 1e-300));
    d[k] = ret * (pi[k] - (k == action ? 1.0 : 0.0)) + beta * pi[k] * (logp + entropy);
  }
  return d;
}

}  // namespace

void control_episode_backward(const ModelParams& params, const ModelConfig& cfg, const ControlConfig& ctrl,
                              const StepWorkspace& ws, const EpisodeTrace& trace, ModelParams& grads) {
  const int total = trace.length();
  if (total == 0) return;
  std::vector<double> rewards;
  rewards.reserve(trace.steps.size());
  for (const auto& s : trace.steps) rewards.push_back(s.reward);
  const auto returns = discounted_returns(rewards, ctrl.gamma, ctrl.normalize_returns);

  const int first = ctrl.truncation_len > 0 ? std::max(0, total - ctrl.truncation_len) : 0;
  const auto n = static_cast<std::size_t>(ws.n_cells);

  Tensor d_c(n, static_cast<std::size_t>(cfg.state_dim));
  Tensor d_h(n, static_cast<std::size_t>(cfg.gru_hidden()));

  for (int t = total - 1; t >= first; --t) {
    const ControlStepTrace& st = trace.steps[t];

    // replay the internal updates of this environment step with caches
    std::vector<StepCache> caches(static_cast<std::size_t>(ctrl.n_steps));
    CellField field = st.field_before;
    Tensor logits;
    for (int k = 0; k < ctrl.n_steps; ++k) {
      CellField next = make_field(cfg, ws);
      nca_step(params, cfg, ws, field, st.obs, st.u_prev, next, &logits, &caches[k]);
      field = std::move(next);
    }

    const auto d_region = policy_logit_grad(st.logits, st.noise, st.action, returns[t], ctrl.entropy_coef);
    Tensor d_logits(n, 2);
    region_logits_backward(logits, ws, d_region, d_logits);

    for (int k = ctrl.n_steps - 1; k >= 0; --k) {
      Tensor d_c_in, d_h_in;
      nca_step_backward(params, cfg, ws, caches[k], d_c, d_h,
                        k == ctrl.n_steps - 1 ? &d_logits : nullptr, d_c_in, d_h_in, grads);
      d_c = std::move(d_c_in);
      d_h = std::move(d_h_in);
    }
  }
}

double replay_reinforce_loss(const ModelParams& params, const ModelConfig& cfg, const ControlConfig& ctrl,
                             const StepWorkspace& ws, const EpisodeTrace& frozen) {
  std::vector<double> rewards;
  rewards.reserve(frozen.steps.size());
  for (const auto& s : frozen.steps) rewards.push_back(s.reward);
  const auto returns = discounted_returns(rewards, ctrl.gamma, ctrl.normalize_returns);

  CellField field = make_field(cfg, ws);
  double loss = 0.0;
  for (std::size_t t = 0; t < frozen.steps.size(); ++t) {
    const ControlStepTrace& st = frozen.steps[t];
    const auto logits = control_step(params, cfg, ctrl, ws, field, st.obs, st.u_prev);
    std::array<double, 4> perturbed;
    for (int k = 0; k < 4; ++k) perturbed[k] = logits[k] + st.noise[k];
    const auto pi = softmax(std::span<const double>(perturbed.data(), 4));
    double entropy = 0.0;
    for (double p : pi)
      if (p > 0.0) entropy -= p * std::log(p);
    loss += -std::log(std::max(pi[st.action], 1e-300)) * returns[t] - ctrl.entropy_coef * entropy;
  }
  return loss;
}

double random_policy_mean_reward(const EnvConfig& cfg, int n_episodes, std::uint64_t seed) {
  PlanarLander env(cfg);
  Rng rng(seed);
  double total = 0.0;
  for (int e = 1; e <= n_episodes; ++e) {
    env.reset(static_cast<std::uint64_t>(e));
    for (;;) {
      const StepResult r = env.step(static_cast<int>(rng.bounded(4)));
      total += r.reward;
      if (r.done) break;
    }
  }
  return total / static_cast<double>(n_episodes);
}

LanderTrainResult train_lander(const ControlConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  LanderTrainResult result;
  result.model_cfg = lander_model_config(cfg.attention_hidden, cfg.msg_hidden, cfg.msg_out);

  const Topology topo = make_lander_topology(cfg.condition, cfg.targets_per_zone, cfg.seed);
  const StepWorkspace ws = build_workspace(topo);

  Rng param_rng(mix_seed(cfg.seed, kParamStream));
  result.params = make_model_params(result.model_cfg, param_rng);
  auto param_refs = collect_params(result.params, result.model_cfg);

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  adam_cfg.beta1 = cfg.beta1;
  adam_cfg.beta2 = cfg.beta2;
  adam_cfg.weight_decay = cfg.weight_decay;
  adam_cfg.grad_clip_norm = cfg.grad_clip;
  AdamState adam(adam_cfg);

  EnvConfig env_cfg = cfg.env;
  env_cfg.seed = cfg.seed;
  PlanarLander env(env_cfg);

  const double threshold = cfg.builtin_success_reward > 0.0
                               ? cfg.builtin_success_reward
                               : calibrate_success_threshold(env_cfg, cfg.calibration_episodes);

  RunRecord& rec = result.record;
  rec.task = "lander";
  rec.condition = to_string(cfg.condition);
  rec.seed = cfg.seed;
  rec.config_digest = cfg.digest();
  rec.config_echo = cfg.echo();
  rec.config_echo["calibrated_threshold"] = std::to_string(threshold);
  rec.success_threshold = threshold;
  rec.censored = true;
  rec.episodes_to_success = cfg.max_episodes;
  rec.best_eval_reward = -1e300;

  Rng policy_rng(mix_seed(cfg.seed, kPolicyStream));

  for (int episode = 1; episode <= cfg.max_episodes; ++episode) {
    // training episodes use even reset tags, evaluations odd ones
    EpisodeTrace trace = run_control_episode(result.params, result.model_cfg, cfg, ws, env,
                                             static_cast<std::uint64_t>(2 * episode), policy_rng, true);
    const double loss = reinforce_loss(trace, cfg.entropy_coef, cfg.gamma, cfg.normalize_returns);

    TrainCurvePoint point;
    point.episode = episode;
    point.train_reward = trace.total_reward;
    point.loss = loss;
    double entropy_sum = 0.0;
    for (const auto& s : trace.steps) entropy_sum += s.entropy;
    point.entropy_mean = entropy_sum / std::max(1, trace.length());

    if (!std::isfinite(loss)) {
      rec.error = "non-finite loss at episode " + std::to_string(episode);
      result.curve.push_back(point);
      break;
    }

    ModelParams grads = zeros_like(result.params);
    control_episode_backward(result.params, result.model_cfg, cfg, ws, trace, grads);
    auto grad_refs = collect_params(grads, result.model_cfg);
    try {
      adam.step(param_refs, grad_refs);
    } catch (const std::exception& e) {
      rec.error = std::string("episode ") + std::to_string(episode) + ": " + e.what();
      result.curve.push_back(point);
      break;
    }

    if (episode % cfg.eval_interval == 0) {
      Rng eval_rng(0);  // unused in evaluation mode (greedy, no noise)
      EpisodeTrace eval = run_control_episode(result.params, result.model_cfg, cfg, ws, env,
                                              static_cast<std::uint64_t>(2 * episode + 1), eval_rng, false);
      point.eval_reward = eval.total_reward;
      rec.best_eval_reward = std::max(rec.best_eval_reward, eval.total_reward);
      if (eval.total_reward >= threshold) {
        rec.success = true;
        rec.censored = false;
        rec.episodes_to_success = episode;
        result.curve.push_back(point);
        break;
      }
    }
    result.curve.push_back(point);
  }

  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

std::string curve_csv(const std::vector<TrainCurvePoint>& curve) {
  std::ostringstream os;
  os << "episode,train_reward,eval_reward,loss,entropy_mean\n";
  for (const auto& p : curve) {
    os << p.episode << ',' << p.train_reward << ',';
    if (p.eval_reward) os << *p.eval_reward;
    os << ',' << p.loss << ',' << p.entropy_mean << '\n';
  }
  return os.str();
}

}  // namespace nca
