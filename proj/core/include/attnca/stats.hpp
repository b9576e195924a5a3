#pragma once

#include <span>
#include <vector>

#include "attnca/rng.hpp"

namespace nca {

/// One run's time-to-success observation; censored runs sit at the horizon.
struct SurvivalPoint {
  double time = 0.0;
  bool censored = false;
};

using SurvivalData = std::vector<SurvivalPoint>;

/// Restricted mean survival time: area under the Kaplan-Meier curve on
/// [0, tau]. Ties: events are processed before censorings at the same time.
/// With no censoring and all times <= tau this equals the sample mean.
double rmst(const SurvivalData& data, double tau);

/// One-sided log-rank test for "a converges faster" (i.e. group a has the
/// elevated event hazard): Z = sum(O_a - E_a) / sqrt(sum V), p = Phi(-Z).
/// Identical groups give p = 0.5; swapping groups maps p to 1 - p.
double log_rank_one_sided(const SurvivalData& a, const SurvivalData& b);

/// One-sided permutation test on the RMST difference, alternative "a has the
/// smaller RMST". p = (1 + #{delta_perm <= delta_obs}) / (n_perm + 1).
double permutation_test_rmst(const SurvivalData& a, const SurvivalData& b, int n_perm, double tau, Rng& rng);

/// One-sided Fisher's exact test for "success rate a > success rate b",
/// hypergeometric tail via log-gamma factorials.
double fisher_exact_one_sided(int successes_a, int n_a, int successes_b, int n_b);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace nca
