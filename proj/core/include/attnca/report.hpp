#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "attnca/run_record.hpp"
#include "attnca/stats.hpp"

namespace nca {

struct ConditionSummary {
  std::string condition;
  std::string label;
  int n_runs = 0;
  int n_success = 0;
  double success_rate = 0.0;
  std::optional<double> mean_episodes;  // successful runs only
  std::optional<double> std_episodes;
  double rmst_value = 0.0;
};

struct PairwiseResult {
  std::string label;  // "<A> vs <B>", direction: A better (faster / higher rate)
  double rmst_a = 0.0;
  double rmst_b = 0.0;
  double log_rank_p = 1.0;
  double permutation_p = 1.0;
  double fisher_p = 1.0;
};

struct Report {
  double tau = 0.0;
  int n_perm = 0;
  std::vector<ConditionSummary> summaries;
  std::vector<PairwiseResult> pairwise;
  std::vector<std::string> warnings;
};

/// Display labels matching the experiment write-ups ("3x3 Vanilla",
/// "T-Shape+LR", ...); unknown conditions fall back to their raw name.
std::string condition_label(const std::string& condition);

/// (time, censored) pairs for one condition at horizon tau: successful runs
/// contribute their episode count (censored at tau if beyond it), failed runs
/// are right-censored at tau.
SurvivalData records_to_survival(const std::vector<RunRecord>& records, const std::string& condition,
                                 double tau);

Report build_report(const std::vector<RunRecord>& records, double tau, int n_perm, std::uint64_t perm_seed);

/// Writes summary.csv, summary.txt, pairwise.csv and distributions.csv.
void emit_report(const Report& report, const std::vector<RunRecord>& records,
                 const std::filesystem::path& out_dir);

std::string report_text(const Report& report);

}  // namespace nca
