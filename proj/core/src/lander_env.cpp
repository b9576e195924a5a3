#include "attnca/lander_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nca {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Flying: return "flying";
    case Outcome::Landed: return "landed";
    case Outcome::Crashed: return "crashed";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

std::map<std::string, std::string> EnvConfig::echo() const {
  std::map<std::string, std::string> m;
  m["wind_power"] = std::to_string(wind_power);
  m["turbulence_power"] = std::to_string(turbulence_power);
  m["gravity"] = std::to_string(gravity);
  m["max_steps"] = std::to_string(max_steps);
  m["main_thrust"] = std::to_string(main_thrust);
  m["side_thrust"] = std::to_string(side_thrust);
  m["side_torque"] = std::to_string(side_torque);
  m["pad_half_width"] = std::to_string(pad_half_width);
  m["env_seed"] = std::to_string(seed);
  return m;
}

namespace {
std::array<double, 8> observe(const LanderState& s) {
  return {s.x, s.y, s.vx, s.vy, s.theta, s.omega,
          s.left_contact ? 1.0 : 0.0, s.right_contact ? 1.0 : 0.0};
}
}  // namespace

double PlanarLander::shaping() const {
  const LanderState& s = state_;
  return -100.0 * std::sqrt(s.x * s.x + s.y * s.y) - 100.0 * std::sqrt(s.vx * s.vx + s.vy * s.vy) -
         100.0 * std::abs(s.theta) + kLegContactBonus * (s.left_contact ? 1.0 : 0.0) +
         kLegContactBonus * (s.right_contact ? 1.0 : 0.0);
}

std::array<double, 8> PlanarLander::reset(std::uint64_t episode_seed) {
  Rng rng(mix_seed(cfg_.seed, episode_seed));
  state_ = LanderState{};
  state_.x = rng.uniform(-0.2, 0.2);
  state_.y = 1.2;
  state_.vx = rng.uniform(-0.2, 0.2);
  state_.vy = rng.uniform(-0.4, 0.0);
  state_.theta = rng.uniform(-0.1, 0.1);
  state_.omega = rng.uniform(-0.05, 0.05);
  const double two_pi = 2.0 * std::numbers::pi;
  wind_phase1_ = rng.uniform(0.0, two_pi);
  wind_phase2_ = rng.uniform(0.0, two_pi);
  turb_phase1_ = rng.uniform(0.0, two_pi);
  turb_phase2_ = rng.uniform(0.0, two_pi);
  done_ = false;
  prev_shaping_ = shaping();
  return observe(state_);
}

StepResult PlanarLander::step(int action) {
  if (done_) throw std::logic_error("PlanarLander::step: episode is done, reset first");
  if (action < 0 || action > 3) throw std::invalid_argument("PlanarLander::step: bad action");
  LanderState& s = state_;

  // body-frame thrust and torque
  double ax_body = 0.0, ay_body = 0.0, torque = 0.0, fuel = 0.0;
  switch (static_cast<LanderAction>(action)) {
    case LanderAction::Noop: break;
    case LanderAction::Main:
      ay_body = cfg_.main_thrust;
      fuel = kMainFuelCost;
      break;
    case LanderAction::Left:
      ax_body = cfg_.side_thrust;
      torque = cfg_.side_torque;
      fuel = kSideFuelCost;
      break;
    case LanderAction::Right:
      ax_body = -cfg_.side_thrust;
      torque = -cfg_.side_torque;
      fuel = kSideFuelCost;
      break;
  }

  // smooth seeded wind (horizontal force) and turbulence (torque)
  const double n = static_cast<double>(s.step);
  const double wind = cfg_.wind_power * kWindAccelPerPower *
                      std::tanh(std::sin(0.06 * n + wind_phase1_) + std::sin(0.0171 * n + wind_phase2_));
  const double turb = cfg_.turbulence_power * kTurbAccelPerPower *
                      std::tanh(std::sin(0.11 * n + turb_phase1_) + std::sin(0.0223 * n + turb_phase2_));

  const double ct = std::cos(s.theta), st = std::sin(s.theta);
  const double ax = ct * ax_body - st * ay_body + wind;
  const double ay = st * ax_body + ct * ay_body - cfg_.gravity;

  // semi-implicit Euler
  s.vx += ax * kDt;
  s.vy += ay * kDt;
  s.omega += (torque + turb) * kDt;
  s.x += s.vx * kDt;
  s.y += s.vy * kDt;
  s.theta += s.omega * kDt;
  s.step += 1;

  // leg tips: body offsets (+-kLegDx, -kLegDy) rotated into the world frame
  const double c2 = std::cos(s.theta), s2 = std::sin(s.theta);
  const double left_y = s.y + (-kLegDx) * s2 + (-kLegDy) * c2;
  const double right_y = s.y + (kLegDx)*s2 + (-kLegDy) * c2;
  const double hull_y = s.y - kHullDrop * c2;
  const double speed = std::sqrt(s.vx * s.vx + s.vy * s.vy);

  Outcome outcome = Outcome::Flying;
  const bool left_touch = left_y <= 0.0;
  const bool right_touch = right_y <= 0.0;

  if (std::abs(s.x) > kOutOfBounds || s.y > kOutOfBounds) {
    outcome = Outcome::Crashed;
  } else if (hull_y <= 0.0) {
    outcome = Outcome::Crashed;  // hull hit the ground
  } else if ((left_touch || right_touch) && speed > kCrashSpeed) {
    outcome = Outcome::Crashed;  // came in too hot
  } else if ((left_touch || right_touch) && std::abs(s.theta) > kMaxLandTilt) {
    outcome = Outcome::Crashed;  // touched down sideways
  } else if (left_touch || right_touch) {
    // gentle contact: legs absorb vertical speed, friction bleeds the rest
    s.left_contact = left_touch;
    s.right_contact = right_touch;
    const double push = std::max(0.0, -std::min(left_y, right_y));
    s.y += push;
    if (s.vy < 0.0) s.vy = 0.0;
    s.vx *= 0.7;
    s.omega *= 0.7;
    if (left_touch && right_touch && std::abs(s.x) <= cfg_.pad_half_width &&
        speed <= kMaxLandSpeed && std::abs(s.omega) <= kMaxLandOmega) {
      outcome = Outcome::Landed;
    }
  } else {
    s.left_contact = false;
    s.right_contact = false;
  }

  if (outcome == Outcome::Flying && s.step >= cfg_.max_steps) outcome = Outcome::Timeout;

  const double now_shaping = shaping();
  double reward = now_shaping - prev_shaping_ - fuel;
  prev_shaping_ = now_shaping;
  if (outcome == Outcome::Landed) reward += kTerminalReward;
  if (outcome == Outcome::Crashed) reward -= kTerminalReward;

  StepResult result;
  result.observation = observe(s);
  result.reward = reward;
  result.outcome = outcome;
  result.done = outcome != Outcome::Flying;
  done_ = result.done;
  return result;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::ostringstream os;
  os << "step,x,y,vx,vy,theta,omega,left_contact,right_contact,action,reward,done,outcome\n";
  for (const auto& r : rows) {
    os << r.step;
    for (double v : r.obs) os << ',' << v;
    os << ',' << r.action << ',' << r.reward << ',' << (r.done ? 1 : 0) << ',' << to_string(r.outcome) << '\n';
  }
  return os.str();
}

int scripted_lander_policy(const std::array<double, 8>& obs) {
  const double x = obs[0], y = obs[1], vx = obs[2], vy = obs[3];
  const double theta = obs[4], omega = obs[5];
  const bool contact = obs[6] > 0.5 || obs[7] > 0.5;

  double angle_target = std::clamp(0.5 * x + 1.0 * vx, -0.4, 0.4);
  double hover_target = 0.5 * std::abs(x);

  double angle_todo = (angle_target - theta) * 0.6 - omega * 1.0;
  double hover_todo = (hover_target - y) * 0.6 - vy * 1.0;

  if (contact) {
    angle_todo = 0.0;
    hover_todo = -vy * 0.5;
  }

  if (hover_todo > std::abs(angle_todo) && hover_todo > 0.07) return static_cast<int>(LanderAction::Main);
  if (angle_todo > 0.07) return static_cast<int>(LanderAction::Left);
  if (angle_todo < -0.07) return static_cast<int>(LanderAction::Right);
  return static_cast<int>(LanderAction::Noop);
}

std::pair<double, Outcome> scripted_episode(const EnvConfig& cfg, std::uint64_t episode_seed,
                                            std::vector<TrajectoryRow>* trajectory) {
  PlanarLander env(cfg);
  auto obs = env.reset(episode_seed);
  double total = 0.0;
  Outcome outcome = Outcome::Flying;
  for (;;) {
    const int action = scripted_lander_policy(obs);
    const StepResult r = env.step(action);
    total += r.reward;
    if (trajectory)
      trajectory->push_back({env.state().step, r.observation, action, r.reward, r.done, r.outcome});
    obs = r.observation;
    if (r.done) {
      outcome = r.outcome;
      break;
    }
  }
  return {total, outcome};
}

double calibrate_success_threshold(const EnvConfig& cfg, int n_episodes) {
  if (n_episodes < 1) throw std::invalid_argument("calibrate_success_threshold: need at least one episode");
  std::vector<double> rewards;
  rewards.reserve(static_cast<std::size_t>(n_episodes));
  for (int i = 1; i <= n_episodes; ++i) rewards.push_back(scripted_episode(cfg, static_cast<std::uint64_t>(i)).first);
  std::sort(rewards.begin(), rewards.end());
  // nearest-rank 90th percentile
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * n_episodes));
  return rewards[rank - 1];
}

}  // namespace nca
