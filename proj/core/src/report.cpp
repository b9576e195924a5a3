#include "attnca/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nca {

std::string condition_label(const std::string& condition) {
  static const std::map<std::string, std::string> kLabels = {
      {"v3", "3x3 Vanilla"},       {"lr3", "3x3 Long-Range"},
      {"v5", "5x5 Vanilla"},       {"lr5", "5x5 Long-Range"},
      {"vanilla", "Vanilla"},      {"vanilla-lr", "Vanilla+LR"},
      {"tshape", "T-Shape"},       {"tshape-lr", "T-Shape+LR"},
  };
  const auto it = kLabels.find(condition);
  return it == kLabels.end() ? condition : it->second;
}

namespace {

// canonical ordering for known conditions, lexicographic otherwise
int condition_rank(const std::string& c) {
  static const std::map<std::string, int> kRank = {
      {"v3", 0},      {"lr3", 1},        {"v5", 2},     {"lr5", 3},
      {"vanilla", 0}, {"vanilla-lr", 1}, {"tshape", 2}, {"tshape-lr", 3},
  };
  const auto it = kRank.find(c);
  return it == kRank.end() ? 100 : it->second;
}

}  // namespace

SurvivalData records_to_survival(const std::vector<RunRecord>& records, const std::string& condition,
                                 double tau) {
  SurvivalData data;
  for (const auto& r : records) {
    if (r.condition != condition) continue;
    if (r.success && r.episodes_to_success <= tau)
      data.push_back({static_cast<double>(r.episodes_to_success), false});
    else
      data.push_back({tau, true});
  }
  return data;
}

Report build_report(const std::vector<RunRecord>& records, double tau, int n_perm, std::uint64_t perm_seed) {
  Report report;
  report.tau = tau;
  report.n_perm = n_perm;

  std::vector<std::string> conditions;
  for (const auto& r : records)
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end())
      conditions.push_back(r.condition);
  std::sort(conditions.begin(), conditions.end(), [](const std::string& a, const std::string& b) {
    const int ra = condition_rank(a), rb = condition_rank(b);
    return ra != rb ? ra < rb : a < b;
  });

  for (const auto& c : conditions) {
    ConditionSummary s;
    s.condition = c;
    s.label = condition_label(c);
    std::vector<double> times;
    int cap_violations = 0;
    for (const auto& r : records) {
      if (r.condition != c) continue;
      ++s.n_runs;
      if (r.success) {
        ++s.n_success;
        times.push_back(static_cast<double>(r.episodes_to_success));
      }
      const auto it = r.config_echo.find("max_episodes");
      if (it != r.config_echo.end() && std::stod(it->second) < tau) ++cap_violations;
    }
    s.success_rate = s.n_runs ? static_cast<double>(s.n_success) / s.n_runs : 0.0;
    if (!times.empty()) {
      double mean = 0.0;
      for (double t : times) mean += t;
      mean /= static_cast<double>(times.size());
      s.mean_episodes = mean;
      double var = 0.0;
      for (double t : times) var += (t - mean) * (t - mean);
      s.std_episodes = times.size() > 1 ? std::sqrt(var / (static_cast<double>(times.size()) - 1.0)) : 0.0;
    }
    if (cap_violations > 0)
      report.warnings.push_back("condition " + c + ": " + std::to_string(cap_violations) +
                                " run(s) trained with max_episodes below tau=" + std::to_string(tau) +
                                "; censoring at tau overstates their observation window");
    const auto surv = records_to_survival(records, c, tau);
    if (!surv.empty()) s.rmst_value = rmst(surv, tau);
    report.summaries.push_back(std::move(s));
  }

  Rng perm_rng(perm_seed);
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    for (std::size_t j = i + 1; j < conditions.size(); ++j) {
      const auto a = records_to_survival(records, conditions[i], tau);
      const auto b = records_to_survival(records, conditions[j], tau);
      if (a.empty() || b.empty()) continue;
      PairwiseResult pr;
      pr.label = condition_label(conditions[i]) + " vs " + condition_label(conditions[j]);
      pr.rmst_a = rmst(a, tau);
      pr.rmst_b = rmst(b, tau);
      bool any_event = false;
      for (const auto& p : a) any_event |= !p.censored;
      for (const auto& p : b) any_event |= !p.censored;
      pr.log_rank_p = any_event ? log_rank_one_sided(a, b) : 1.0;
      pr.permutation_p = permutation_test_rmst(a, b, n_perm, tau, perm_rng);
      int sa = 0, sb = 0, na = 0, nb = 0;
      for (const auto& r : records) {
        if (r.condition == conditions[i]) {
          ++na;
          sa += r.success ? 1 : 0;
        } else if (r.condition == conditions[j]) {
          ++nb;
          sb += r.success ? 1 : 0;
        }
      }
      pr.fisher_p = fisher_exact_one_sided(sa, na, sb, nb);
      report.pairwise.push_back(std::move(pr));
    }
  }
  return report;
}

std::string report_text(const Report& report) {
  std::ostringstream os;
  os << "Survival analysis at tau=" << report.tau << " (" << report.n_perm << " permutations)\n";
  os << "One-sided tests: first condition better (faster convergence / higher success rate)\n\n";
  for (const auto& w : report.warnings) os << "WARNING: " << w << '\n';
  if (!report.warnings.empty()) os << '\n';

  os << "condition            n    success  rate     mean_eps   std_eps    RMST\n";
  for (const auto& s : report.summaries) {
    std::ostringstream label;
    label << s.label;
    os << label.str();
    for (std::size_t k = label.str().size(); k < 21; ++k) os << ' ';
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-5d%-9d%-9.3f", s.n_runs, s.n_success, s.success_rate);
    os << buf;
    if (s.mean_episodes)
      std::snprintf(buf, sizeof(buf), "%-11.1f%-11.1f", *s.mean_episodes, *s.std_episodes);
    else
      std::snprintf(buf, sizeof(buf), "%-11s%-11s", "-", "-");
    os << buf;
    std::snprintf(buf, sizeof(buf), "%.1f", s.rmst_value);
    os << buf << '\n';
  }
  os << '\n';
  if (!report.pairwise.empty()) {
    os << "pairwise (A vs B)                        RMST_A    RMST_B    logrank_p    perm_p       fisher_p\n";
    for (const auto& p : report.pairwise) {
      os << p.label;
      for (std::size_t k = p.label.size(); k < 41; ++k) os << ' ';
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-10.1f%-10.1f%-13.3e%-13.3e%-13.3e", p.rmst_a, p.rmst_b,
                    p.log_rank_p, p.permutation_p, p.fisher_p);
      os << buf << '\n';
    }
  }
  return os.str();
}

void emit_report(const Report& report, const std::vector<RunRecord>& records,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream os(out_dir / "summary.csv", std::ios::trunc);
    os << "condition,label,n_runs,n_success,success_rate,mean_episodes,std_episodes,rmst\n";
    for (const auto& s : report.summaries) {
      os << s.condition << ',' << s.label << ',' << s.n_runs << ',' << s.n_success << ','
         << s.success_rate << ',';
      if (s.mean_episodes) os << *s.mean_episodes;
      os << ',';
      if (s.std_episodes) os << *s.std_episodes;
      os << ',' << s.rmst_value << '\n';
    }
  }
  {
    std::ofstream os(out_dir / "pairwise.csv", std::ios::trunc);
    os << "comparison,rmst_a,rmst_b,log_rank_p,permutation_p,fisher_p\n";
    for (const auto& p : report.pairwise)
      os << '"' << p.label << "\"," << p.rmst_a << ',' << p.rmst_b << ',' << p.log_rank_p << ','
         << p.permutation_p << ',' << p.fisher_p << '\n';
  }
  {
    std::ofstream os(out_dir / "distributions.csv", std::ios::trunc);
    os << "condition,label,seed,episodes_to_success,censored,success\n";
    for (const auto& r : records)
      os << r.condition << ',' << condition_label(r.condition) << ',' << r.seed << ','
         << r.episodes_to_success << ',' << (r.censored ? 1 : 0) << ',' << (r.success ? 1 : 0) << '\n';
  }
  {
    std::ofstream os(out_dir / "summary.txt", std::ios::trunc);
    os << report_text(report);
  }
}

}  // namespace nca
