#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace nca {

/// One training run's outcome, serialized as a JSON-lines record. The
/// deterministic payload excludes wall_time_s (measurement metadata), which
/// is what outcome comparisons use.
struct RunRecord {
  std::string task;       // "morph" or "lander"
  std::string condition;
  std::uint64_t seed = 0;
  bool success = false;
  int episodes_to_success = 0;  // censor value (max_episodes) when unsuccessful
  bool censored = false;
  double final_accuracy = 0.0;     // morph
  double best_eval_reward = 0.0;   // lander
  double success_threshold = 0.0;  // lander, calibrated or overridden
  double wall_time_s = 0.0;
  std::uint64_t config_digest = 0;
  std::map<std::string, std::string> config_echo;
  std::string error;  // non-empty when the run aborted

  /// Equality on everything except wall_time_s.
  bool same_outcome(const RunRecord& other) const;
};

std::string to_json_line(const RunRecord& r);
RunRecord run_record_from_json(const std::string& line);

}  // namespace nca
