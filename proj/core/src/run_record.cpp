#include "attnca/run_record.hpp"

#include <nlohmann/json.hpp>

namespace nca {

bool RunRecord::same_outcome(const RunRecord& other) const {
  return task == other.task && condition == other.condition && seed == other.seed &&
         success == other.success && episodes_to_success == other.episodes_to_success &&
         censored == other.censored && final_accuracy == other.final_accuracy &&
         best_eval_reward == other.best_eval_reward && success_threshold == other.success_threshold &&
         config_digest == other.config_digest && config_echo == other.config_echo && error == other.error;
}

std::string to_json_line(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["task"] = r.task;
  j["condition"] = r.condition;
  j["seed"] = r.seed;
  j["success"] = r.success;
  j["episodes_to_success"] = r.episodes_to_success;
  j["censored"] = r.censored;
  if (r.task == "morph") j["final_accuracy"] = r.final_accuracy;
  if (r.task == "lander") {
    j["best_eval_reward"] = r.best_eval_reward;
    j["success_threshold"] = r.success_threshold;
  }
  j["wall_time_s"] = r.wall_time_s;
  j["config_digest"] = r.config_digest;
  j["config"] = r.config_echo;
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

RunRecord run_record_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  RunRecord r;
  r.task = j.at("task").get<std::string>();
  r.condition = j.at("condition").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.success = j.at("success").get<bool>();
  r.episodes_to_success = j.at("episodes_to_success").get<int>();
  r.censored = j.at("censored").get<bool>();
  if (j.contains("final_accuracy")) r.final_accuracy = j["final_accuracy"].get<double>();
  if (j.contains("best_eval_reward")) r.best_eval_reward = j["best_eval_reward"].get<double>();
  if (j.contains("success_threshold")) r.success_threshold = j["success_threshold"].get<double>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.config_digest = j.at("config_digest").get<std::uint64_t>();
  if (j.contains("config")) r.config_echo = j["config"].get<std::map<std::string, std::string>>();
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  return r;
}

}  // namespace nca
