#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attnca/rng.hpp"

namespace nca {

enum class LanderAction : int { Noop = 0, Left = 1, Main = 2, Right = 3 };
enum class Outcome { Flying, Landed, Crashed, Timeout };
std::string to_string(Outcome o);

/// Deterministic planar lander. Pad-centered units, y up, ground at y = 0;
/// semi-implicit Euler at a fixed timestep. The interface (8-dim observation,
/// 4 discrete actions, shaped reward with +-100 terminals) mirrors the common
/// lunar-lander contract; the dynamics constants below are this module's own
/// and are not calibrated against any external engine.
struct EnvConfig {
  double wind_power = 5.0;        // horizontal force amplitude, in accel units of kWindAccelPerPower
  double turbulence_power = 1.5;  // torque amplitude, in units of kTurbAccelPerPower
  double gravity = 10.0;          // downward
  int max_steps = 1000;
  double main_thrust = 15.0;      // body-frame upward acceleration
  double side_thrust = 2.0;       // body-frame lateral acceleration
  double side_torque = 1.5;       // angular acceleration from a side engine
  double pad_half_width = 0.35;
  std::uint64_t seed = 0;         // base seed, mixed with the episode seed at reset

  std::map<std::string, std::string> echo() const;
};

struct LanderState {
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  double theta = 0, omega = 0;
  bool left_contact = false, right_contact = false;
  int step = 0;
};

struct StepResult {
  std::array<double, 8> observation{};
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::Flying;
};

/// Minimal environment interface so an external adapter can replace the
/// built-in physics without touching the controller.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::array<double, 8> reset(std::uint64_t episode_seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual int obs_dim() const = 0;
  virtual int action_count() const = 0;
};

class PlanarLander : public Environment {
 public:
  // Integration and geometry constants. Observation order is fixed:
  // [x, y, vx, vy, theta, omega, left_contact, right_contact].
  static constexpr double kDt = 0.02;
  static constexpr double kLegDx = 0.12;        // lateral leg offset (body frame)
  static constexpr double kLegDy = 0.14;        // legs reach this far below the hull center
  static constexpr double kHullDrop = 0.06;     // hull bottom below center; hull contact = crash
  static constexpr double kWindAccelPerPower = 0.2;
  static constexpr double kTurbAccelPerPower = 0.2;
  static constexpr double kMaxLandSpeed = 0.25;  // gentle-landing speed bound
  static constexpr double kMaxLandOmega = 0.4;
  static constexpr double kMaxLandTilt = 0.35;
  static constexpr double kCrashSpeed = 0.9;     // contact faster than this crashes
  static constexpr double kOutOfBounds = 2.5;
  static constexpr double kMainFuelCost = 0.3;
  static constexpr double kSideFuelCost = 0.03;
  static constexpr double kLegContactBonus = 10.0;
  static constexpr double kTerminalReward = 100.0;
  static constexpr double kMaxStepReward = 1e4;  // loose documented bound, asserted in tests

  explicit PlanarLander(EnvConfig cfg) : cfg_(cfg) {}

  /// Spawn above the pad: x ~ U(-0.2, 0.2), y = 1.2, vx ~ U(-0.2, 0.2),
  /// vy ~ U(-0.4, 0), theta ~ U(-0.1, 0.1), omega ~ U(-0.05, 0.05), drawn in
  /// that order from Rng(mix_seed(cfg.seed, episode_seed)). Wind and
  /// turbulence phases (two uniforms each on [0, 2*pi)) are drawn next.
  std::array<double, 8> reset(std::uint64_t episode_seed) override;
  StepResult step(int action) override;
  int obs_dim() const override { return 8; }
  int action_count() const override { return 4; }

  const LanderState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  bool done() const { return done_; }

 private:
  double shaping() const;

  EnvConfig cfg_;
  LanderState state_{};
  bool done_ = true;  // must reset before stepping
  double wind_phase1_ = 0, wind_phase2_ = 0, turb_phase1_ = 0, turb_phase2_ = 0;
  double prev_shaping_ = 0;
};

struct TrajectoryRow {
  int step = 0;
  std::array<double, 8> obs{};
  int action = 0;
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::Flying;
};

/// CSV with columns step, obs[0..7], action, reward, done, outcome.
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

/// Proportional landing heuristic used as the development oracle and for
/// calibrating the built-in success threshold: PD targets on angle and
/// descent rate, mapped to the strongest indicated engine.
int scripted_lander_policy(const std::array<double, 8>& obs);

/// Total reward of one scripted-controller episode, with the last outcome.
std::pair<double, Outcome> scripted_episode(const EnvConfig& cfg, std::uint64_t episode_seed,
                                            std::vector<TrajectoryRow>* trajectory = nullptr);

/// 90th-percentile scripted-controller reward over episode seeds 1..n
/// (nearest-rank percentile on the sorted rewards).
double calibrate_success_threshold(const EnvConfig& cfg, int n_episodes = 100);

}  // namespace nca
