#include "attnca/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nca {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

struct KmStep {
  double time;
  int events;
  int at_risk;
};

// Distinct event times with event counts and risk-set sizes; censorings at
// the same time stay in the risk set for that time's events.
std::vector<KmStep> km_steps(const SurvivalData& data) {
  std::vector<SurvivalPoint> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end(), [](const SurvivalPoint& x, const SurvivalPoint& y) {
    if (x.time != y.time) return x.time < y.time;
    return x.censored < y.censored;  // events first at ties
  });
  std::vector<KmStep> steps;
  const int n = static_cast<int>(sorted.size());
  int i = 0;
  while (i < n) {
    const double t = sorted[i].time;
    int events = 0, count = 0;
    while (i + count < n && sorted[i + count].time == t) {
      if (!sorted[i + count].censored) ++events;
      ++count;
    }
    if (events > 0) steps.push_back({t, events, n - i});
    i += count;
  }
  return steps;
}

}  // namespace

double rmst(const SurvivalData& data, double tau) {
  if (data.empty()) throw std::invalid_argument("rmst: empty data");
  if (tau <= 0.0) throw std::invalid_argument("rmst: tau must be positive");
  for (const auto& p : data)
    if (p.time > tau) throw std::invalid_argument("rmst: observation beyond tau");

  double area = 0.0, surv = 1.0, prev_t = 0.0;
  for (const KmStep& s : km_steps(data)) {
    if (s.time >= tau) break;
    area += surv * (s.time - prev_t);
    surv *= 1.0 - static_cast<double>(s.events) / static_cast<double>(s.at_risk);
    prev_t = s.time;
  }
  area += surv * (tau - prev_t);
  return area;
}

double log_rank_one_sided(const SurvivalData& a, const SurvivalData& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("log_rank: empty group");
  bool any_event = false;
  for (const auto& p : a) any_event |= !p.censored;
  for (const auto& p : b) any_event |= !p.censored;
  if (!any_event) throw std::invalid_argument("log_rank: no events in either group");

  // pooled observations tagged by group
  struct Obs {
    double time;
    bool censored;
    bool group_a;
  };
  std::vector<Obs> pooled;
  pooled.reserve(a.size() + b.size());
  for (const auto& p : a) pooled.push_back({p.time, p.censored, true});
  for (const auto& p : b) pooled.push_back({p.time, p.censored, false});
  std::sort(pooled.begin(), pooled.end(), [](const Obs& x, const Obs& y) {
    if (x.time != y.time) return x.time < y.time;
    return x.censored < y.censored;
  });

  const int n_total = static_cast<int>(pooled.size());
  int at_risk_a = static_cast<int>(a.size());
  int at_risk = n_total;
  double observed_minus_expected = 0.0, variance = 0.0;

  int i = 0;
  while (i < n_total) {
    const double t = pooled[i].time;
    int d = 0, d_a = 0, count = 0, leaving_a = 0;
    while (i + count < n_total && pooled[i + count].time == t) {
      const Obs& o = pooled[i + count];
      if (!o.censored) {
        ++d;
        if (o.group_a) ++d_a;
      }
      if (o.group_a) ++leaving_a;
      ++count;
    }
    if (d > 0 && at_risk > 1) {
      const double n1 = at_risk_a, nt = at_risk, dd = d;
      const double expected_a = dd * n1 / nt;
      observed_minus_expected += d_a - expected_a;
      variance += dd * (n1 / nt) * (1.0 - n1 / nt) * (nt - dd) / (nt - 1.0);
    } else if (d > 0 && at_risk == 1) {
      observed_minus_expected += d_a - static_cast<double>(d) * at_risk_a / at_risk;
    }
    at_risk -= count;
    at_risk_a -= leaving_a;
    i += count;
  }

  if (variance <= 0.0) return 0.5;  // degenerate: no informative event times
  const double z = observed_minus_expected / std::sqrt(variance);
  // more events / earlier events in a  =>  z > 0  =>  small p
  return normal_cdf(-z);
}

double permutation_test_rmst(const SurvivalData& a, const SurvivalData& b, int n_perm, double tau, Rng& rng) {
  if (n_perm < 1) throw std::invalid_argument("permutation_test_rmst: n_perm must be >= 1");
  const double observed = rmst(a, tau) - rmst(b, tau);

  SurvivalData pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n_a = a.size();

  std::vector<int> idx(pooled.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);

  int as_extreme = 0;
  SurvivalData pa(n_a), pb(pooled.size() - n_a);
  for (int p = 0; p < n_perm; ++p) {
    std::vector<int> shuffled = rng.sample_without_replacement(idx, idx.size());
    for (std::size_t i = 0; i < n_a; ++i) pa[i] = pooled[shuffled[i]];
    for (std::size_t i = n_a; i < shuffled.size(); ++i) pb[i - n_a] = pooled[shuffled[i]];
    if (rmst(pa, tau) - rmst(pb, tau) <= observed) ++as_extreme;
  }
  return (1.0 + as_extreme) / (n_perm + 1.0);
}

namespace {
double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}
}  // namespace

double fisher_exact_one_sided(int successes_a, int n_a, int successes_b, int n_b) {
  if (successes_a < 0 || successes_b < 0 || successes_a > n_a || successes_b > n_b || n_a < 1 || n_b < 1)
    throw std::invalid_argument("fisher_exact_one_sided: inconsistent counts");
  const int m = successes_a + successes_b;  // fixed success margin
  const int hi = std::min(m, n_a);
  const double log_denom = log_choose(n_a + n_b, m);
  double p = 0.0;
  for (int k = successes_a; k <= hi; ++k)
    p += std::exp(log_choose(n_a, k) + log_choose(n_b, m - k) - log_denom);
  return std::min(p, 1.0);
}

}  // namespace nca
