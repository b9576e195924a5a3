#include "attnca/morph.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "attnca/adam.hpp"
#include "attnca/checkpoint.hpp"

namespace nca {

namespace {

constexpr char kSmiley16Text[] =
    "................\n"
    ".....######.....\n"
    "...##......##...\n"
    "..#..........#..\n"
    ".#............#.\n"
    ".#...oo..oo...#.\n"
    "#....oo..oo....#\n"
    "#..............#\n"
    "#..............#\n"
    "#...o......o...#\n"
    ".#...o....o...#.\n"
    ".#....oooo....#.\n"
    "..#..........#..\n"
    "...##......##...\n"
    ".....######.....\n"
    "................\n";

constexpr char kSmiley8Text[] =
    "..####..\n"
    ".#....#.\n"
    "#.o..o.#\n"
    "#......#\n"
    "#......#\n"
    "#.oooo.#\n"
    ".#....#.\n"
    "..####..\n";

// Independent sub-stream tags, mixed with the run seed.
constexpr std::uint64_t kTopologyStream = 1;
constexpr std::uint64_t kParamStream = 2;
constexpr std::uint64_t kEpisodeStream = 3;

}  // namespace

int TargetPattern::count_of(int cls) const {
  int n = 0;
  for (auto l : labels) n += (l == cls) ? 1 : 0;
  return n;
}

TargetPattern parse_pattern(const std::string& text) {
  TargetPattern p;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (p.cols == 0)
      p.cols = static_cast<int>(line.size());
    else if (static_cast<int>(line.size()) != p.cols)
      throw std::invalid_argument("parse_pattern: ragged rows");
    for (char ch : line) {
      switch (ch) {
        case '.': p.labels.push_back(0); break;
        case '#': p.labels.push_back(1); break;
        case 'o': p.labels.push_back(2); break;
        default: throw std::invalid_argument(std::string("parse_pattern: bad character '") + ch + "'");
      }
    }
    ++p.rows;
  }
  if (p.rows == 0) throw std::invalid_argument("parse_pattern: empty pattern");
  for (int cls = 0; cls < 3; ++cls)
    if (p.count_of(cls) == 0)
      throw std::invalid_argument("parse_pattern: class " + std::to_string(cls) + " absent");
  return p;
}

TargetPattern load_pattern(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_pattern: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_pattern(buf.str());
}

std::string pattern_text(const TargetPattern& p) {
  static constexpr char kChars[] = {'.', '#', 'o'};
  std::string out;
  out.reserve(static_cast<std::size_t>(p.rows) * (p.cols + 1));
  for (int r = 0; r < p.rows; ++r) {
    for (int c = 0; c < p.cols; ++c) out.push_back(kChars[p.labels[r * p.cols + c]]);
    out.push_back('\n');
  }
  return out;
}

const TargetPattern& smiley16() {
  static const TargetPattern p = parse_pattern(kSmiley16Text);
  return p;
}

const TargetPattern& smiley8() {
  static const TargetPattern p = parse_pattern(kSmiley8Text);
  return p;
}

std::string to_string(MorphCondition c) {
  switch (c) {
    case MorphCondition::V3: return "v3";
    case MorphCondition::LR3: return "lr3";
    case MorphCondition::V5: return "v5";
    case MorphCondition::LR5: return "lr5";
  }
  return "?";
}

MorphCondition morph_condition_from_string(const std::string& s) {
  if (s == "v3") return MorphCondition::V3;
  if (s == "lr3") return MorphCondition::LR3;
  if (s == "v5") return MorphCondition::V5;
  if (s == "lr5") return MorphCondition::LR5;
  throw std::invalid_argument("unknown morph condition: " + s);
}

int condition_radius(MorphCondition c) {
  return (c == MorphCondition::V3 || c == MorphCondition::LR3) ? 1 : 2;
}

bool condition_long_range(MorphCondition c) {
  return c == MorphCondition::LR3 || c == MorphCondition::LR5;
}

std::map<std::string, std::string> MorphConfig::echo() const {
  const TargetPattern& pat = pattern.rows ? pattern : smiley16();
  std::map<std::string, std::string> m;
  m["task"] = "morph";
  m["condition"] = to_string(condition);
  m["seed"] = std::to_string(seed);
  m["steps"] = std::to_string(steps);
  m["success_threshold"] = std::to_string(success_threshold);
  m["max_episodes"] = std::to_string(max_episodes);
  m["learning_rate"] = std::to_string(learning_rate);
  m["beta1"] = std::to_string(beta1);
  m["beta2"] = std::to_string(beta2);
  m["grad_clip"] = std::to_string(grad_clip);
  m["init_std"] = std::to_string(init_std);
  m["attention_hidden"] = std::to_string(attention_hidden);
  m["msg_hidden"] = std::to_string(msg_hidden);
  m["zipf_exponent"] = std::to_string(zipf_exponent);
  m["hub_count"] = std::to_string(hub_count);
  m["max_out_degree"] = std::to_string(max_out_degree);
  m["pattern_rows"] = std::to_string(pat.rows);
  m["pattern_cols"] = std::to_string(pat.cols);
  m["pattern_digest"] = std::to_string(fnv1a64(pattern_text(pat)));
  return m;
}

std::uint64_t MorphConfig::digest() const {
  std::string s;
  for (const auto& [k, v] : echo()) s += k + "=" + v + "\n";
  return fnv1a64(s);
}

Tensor init_cell_states(Rng& rng, std::size_t n, std::size_t c, double stddev) {
  Tensor t(n, c);
  for (double& v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

std::pair<int, std::array<double, 3>> decode_phenotype(std::span<const double> cell_state) {
  if (cell_state.size() < 3) throw std::invalid_argument("decode_phenotype: state has fewer than 3 channels");
  auto probs = softmax(cell_state.subspan(0, 3));
  int cls = 0;
  for (int k = 1; k < 3; ++k)
    if (probs[k] > probs[cls]) cls = k;  // lowest index wins ties
  return {cls, {probs[0], probs[1], probs[2]}};
}

std::vector<std::uint8_t> slot_targets(const TargetPattern& pattern, const StepWorkspace& ws) {
  std::vector<std::uint8_t> targets(static_cast<std::size_t>(ws.n_cells));
  for (int slot = 0; slot < ws.n_cells; ++slot) {
    const int cell = ws.grid_of_slot[slot];
    if (cell >= static_cast<int>(pattern.labels.size()))
      throw std::invalid_argument("slot_targets: pattern smaller than grid");
    targets[slot] = pattern.labels[cell];
  }
  return targets;
}

namespace {
// log-softmax over the three visible channels, shared by loss and grad
void visible_log_probs(std::span<const double> row, double out[3]) {
  const double mx = std::max({row[0], row[1], row[2]});
  const double sum = std::exp(row[0] - mx) + std::exp(row[1] - mx) + std::exp(row[2] - mx);
  const double lse = mx + std::log(sum);
  for (int k = 0; k < 3; ++k) out[k] = row[k] - lse;
}
}  // namespace

double morph_loss(const Tensor& c, std::span<const std::uint8_t> targets) {
  if (c.rows() != targets.size()) throw std::invalid_argument("morph_loss: target count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double lp[3];
    visible_log_probs(c.row(i), lp);
    total -= lp[targets[i]];
  }
  return total / static_cast<double>(c.rows());
}

Tensor morph_loss_grad(const Tensor& c, std::span<const std::uint8_t> targets) {
  Tensor d(c.rows(), c.cols());
  const double inv_n = 1.0 / static_cast<double>(c.rows());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double lp[3];
    visible_log_probs(c.row(i), lp);
    auto row = d.row(i);
    for (int k = 0; k < 3; ++k) row[k] = (std::exp(lp[k]) - (targets[i] == k ? 1.0 : 0.0)) * inv_n;
  }
  return d;
}

double morph_accuracy(const Tensor& c, std::span<const std::uint8_t> targets) {
  if (c.rows() != targets.size()) throw std::invalid_argument("morph_accuracy: target count mismatch");
  int correct = 0;
  for (std::size_t i = 0; i < c.rows(); ++i)
    if (decode_phenotype(c.row(i)).first == targets[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(c.rows());
}

MorphEpisode run_morph_episode(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
                               std::span<const std::uint8_t> targets, int steps, Rng& rng, double init_std) {
  MorphEpisode ep;
  CellField field = make_field(cfg, ws);
  field.c = init_cell_states(rng, static_cast<std::size_t>(ws.n_cells),
                             static_cast<std::size_t>(cfg.state_dim), init_std);
  ep.fields.reserve(static_cast<std::size_t>(steps) + 1);
  ep.fields.push_back(field);
  for (int t = 0; t < steps; ++t) {
    CellField next = make_field(cfg, ws);
    nca_step(params, cfg, ws, ep.fields.back(), {}, {}, next);
    ep.fields.push_back(std::move(next));
  }
  ep.loss = morph_loss(ep.fields.back().c, targets);
  ep.accuracy = morph_accuracy(ep.fields.back().c, targets);
  return ep;
}

void morph_episode_backward(const ModelParams& params, const ModelConfig& cfg, const StepWorkspace& ws,
                            const MorphEpisode& episode, std::span<const std::uint8_t> targets,
                            ModelParams& grads) {
  const int steps = static_cast<int>(episode.fields.size()) - 1;
  Tensor d_c = morph_loss_grad(episode.fields.back().c, targets);
  Tensor d_h(episode.fields.back().h.rows(), episode.fields.back().h.cols());
  for (int t = steps - 1; t >= 0; --t) {
    // recompute this step's cache from the stored field
    StepCache cache;
    CellField scratch = make_field(cfg, ws);
    nca_step(params, cfg, ws, episode.fields[t], {}, {}, scratch, nullptr, &cache);
    Tensor d_c_in, d_h_in;
    nca_step_backward(params, cfg, ws, cache, d_c, d_h, nullptr, d_c_in, d_h_in, grads);
    d_c = std::move(d_c_in);
    d_h = std::move(d_h_in);
  }
}

MorphTrainResult train_morph(const MorphConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const TargetPattern& pattern = cfg.pattern.rows ? cfg.pattern : smiley16();

  MorphTrainResult result;
  result.model_cfg = morph_model_config(condition_long_range(cfg.condition), cfg.attention_hidden, cfg.msg_hidden);

  Topology topo;
  topo.grid = build_grid(pattern.rows, pattern.cols);
  topo.local = moore_neighbors(topo.grid, condition_radius(cfg.condition));
  topo.long_range.assign(topo.grid.active.size(), {});
  if (condition_long_range(cfg.condition)) {
    ScaleFreeConfig sf;
    const int n_active = topo.grid.active_count();
    sf.hub_count = cfg.hub_count > 0 ? cfg.hub_count : (n_active + 24) / 25;
    sf.zipf_exponent = cfg.zipf_exponent;
    sf.max_out_degree = cfg.max_out_degree;
    Rng topo_rng(mix_seed(cfg.seed, kTopologyStream));
    topo.long_range = gen_scale_free_longrange(topo.grid, sf, topo_rng);
  }
  const StepWorkspace ws = build_workspace(topo);
  const auto targets = slot_targets(pattern, ws);

  Rng param_rng(mix_seed(cfg.seed, kParamStream));
  result.params = make_model_params(result.model_cfg, param_rng);
  auto param_refs = collect_params(result.params, result.model_cfg);

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  adam_cfg.beta1 = cfg.beta1;
  adam_cfg.beta2 = cfg.beta2;
  adam_cfg.grad_clip_norm = cfg.grad_clip;
  AdamState adam(adam_cfg);

  RunRecord& rec = result.record;
  rec.task = "morph";
  rec.condition = to_string(cfg.condition);
  rec.seed = cfg.seed;
  rec.config_digest = cfg.digest();
  rec.config_echo = cfg.echo();

  Rng episode_rng(mix_seed(cfg.seed, kEpisodeStream));
  rec.censored = true;
  rec.episodes_to_success = cfg.max_episodes;

  for (int episode = 1; episode <= cfg.max_episodes; ++episode) {
    MorphEpisode ep = run_morph_episode(result.params, result.model_cfg, ws, targets, cfg.steps,
                                        episode_rng, cfg.init_std);
    result.loss_trace.push_back(ep.loss);
    result.accuracy_trace.push_back(ep.accuracy);
    rec.final_accuracy = ep.accuracy;

    if (!std::isfinite(ep.loss)) {
      rec.error = "non-finite loss at episode " + std::to_string(episode);
      break;
    }
    if (ep.accuracy >= cfg.success_threshold) {
      rec.success = true;
      rec.censored = false;
      rec.episodes_to_success = episode;
      break;
    }

    ModelParams grads = zeros_like(result.params);
    morph_episode_backward(result.params, result.model_cfg, ws, ep, targets, grads);
    auto grad_refs = collect_params(grads, result.model_cfg);
    try {
      adam.step(param_refs, grad_refs);
    } catch (const std::exception& e) {
      rec.error = std::string("episode ") + std::to_string(episode) + ": " + e.what();
      break;
    }
  }

  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace nca
