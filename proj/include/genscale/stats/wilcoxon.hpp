#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/error.hpp"
#include "genscale/stats/aggregate.hpp"

namespace genscale::stats {

enum class RankSumMethod { automatic, exact, normal_approx };

struct WilcoxonResult {
  double u = 0;                 // Mann-Whitney U of sample a
  double rank_sum_a = 0;
  std::optional<double> z;      // absent for the exact method
  double p_two_sided = 1;
  RankSumMethod method = RankSumMethod::normal_approx;
  bool tie_corrected = false;
  bool continuity_corrected = false;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

inline void to_json(nlohmann::json& j, const WilcoxonResult& r) {
  j = {{"u", r.u},
       {"rank_sum_a", r.rank_sum_a},
       {"z", r.z ? nlohmann::json(*r.z) : nlohmann::json(nullptr)},
       {"p_two_sided", r.p_two_sided},
       {"method", r.method == RankSumMethod::exact ? "exact" : "normal_approx"},
       {"tie_corrected", r.tie_corrected},
       {"continuity_corrected", r.continuity_corrected},
       {"n_a", r.n_a},
       {"n_b", r.n_b}};
}

/// Largest pooled sample size that the automatic method enumerates exactly.
inline constexpr std::size_t kExactRankSumMaxN = 12;

namespace detail {

/// Midranks (1-based) of the pooled sample plus the tie term sum(t^3 - t).
inline std::vector<double> midranks(std::span<const double> pooled, double& tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(n);
  tie_term = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

/// Null distribution of the rank sum of m items drawn from ranks 1..n,
/// as counts indexed by sum (subset-sum recursion over ranks).
inline std::vector<double> rank_sum_counts(std::size_t n, std::size_t m) {
  const std::size_t max_sum = n * (n + 1) / 2;
  // ways[j][s]: subsets of size j with sum s
  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1;
  for (std::size_t r = 1; r <= n; ++r)
    for (std::size_t j = std::min(m, r); j >= 1; --j)
      for (std::size_t s = max_sum; s >= r; --s) ways[j][s] += ways[j - 1][s - r];
  return ways[m];
}

inline double normal_two_sided(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

}  // namespace detail

/// Two-sample Wilcoxon rank-sum (Mann-Whitney) test, two-sided.
///
/// automatic: exact enumeration when the pooled size is <= 12 and there are
/// no ties, otherwise the normal approximation with tie-corrected variance
///   n_a n_b / 12 * ((N + 1) - sum(t^3 - t) / (N (N - 1)))
/// and a 0.5 continuity correction. Forcing `exact` with ties is an error.
inline WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                        RankSumMethod method = RankSumMethod::automatic) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::invalid_input, "rank-sum test needs both samples non-empty");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "rank-sum test: non-finite observation");

  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  double tie_term = 0;
  const auto ranks = detail::midranks(pooled, tie_term);
  const bool ties = tie_term > 0;
  if (ties && std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); }))
    throw Error(ErrorCode::degenerate, "degenerate: all observations tied");

  WilcoxonResult r;
  r.n_a = na;
  r.n_b = nb;
  r.rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(na), 0.0);
  r.u = r.rank_sum_a - static_cast<double>(na * (na + 1)) / 2.0;

  if (method == RankSumMethod::automatic)
    method = (!ties && n <= kExactRankSumMaxN) ? RankSumMethod::exact : RankSumMethod::normal_approx;
  r.method = method;

  if (method == RankSumMethod::exact) {
    if (ties) throw Error(ErrorCode::invalid_input, "exact rank-sum distribution requires untied data");
    const auto counts = detail::rank_sum_counts(n, na);
    const auto w = static_cast<std::size_t>(std::llround(r.rank_sum_a));
    double total = 0, below = 0, above = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (s <= w) below += counts[s];
      if (s >= w) above += counts[s];
    }
    r.p_two_sided = std::min(1.0, 2.0 * std::min(below, above) / total);
    return r;
  }

  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb), dn = static_cast<double>(n);
  const double mean = dna * dnb / 2.0;
  const double var = dna * dnb / 12.0 * ((dn + 1) - tie_term / (dn * (dn - 1)));
  const double diff = r.u - mean;
  const double corrected = std::max(0.0, std::abs(diff) - 0.5);
  r.z = (diff < 0 ? -corrected : corrected) / std::sqrt(var);
  r.p_two_sided = detail::normal_two_sided(*r.z);
  r.tie_corrected = ties;
  r.continuity_corrected = true;
  return r;
}

/// Splits one dimension's means by gold label (a = GENERIC, b = NON-GENERIC).
inline WilcoxonResult wilcoxon_by_label(const std::vector<AggregatedItem>& items,
                                        const std::map<std::string, Label>& gold, Dimension dim,
                                        RankSumMethod method = RankSumMethod::automatic) {
  std::vector<double> generic, non_generic;
  for (const auto& item : items) {
    auto it = gold.find(item.sentence_id);
    if (it == gold.end())
      throw Error(ErrorCode::not_found, "no gold label for sentence '" + item.sentence_id + "'",
                  {{"sentence_id", item.sentence_id}});
    auto m = item.mean(dim);
    if (!m)
      throw Error(ErrorCode::invalid_input,
                  "sentence '" + item.sentence_id + "' has no " + std::string(to_string(dim)) + " ratings");
    (it->second == Label::generic ? generic : non_generic).push_back(*m);
  }
  return wilcoxon_rank_sum(generic, non_generic, method);
}

}  // namespace genscale::stats
