#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "genscale/corpus/types.hpp"
#include "genscale/util/format.hpp"
#include "genscale/util/hash.hpp"

namespace genscale::corpus {

namespace detail {

struct LemmaPool {
  std::string lemma;
  double concreteness = 0;
  std::vector<std::size_t> generic;      // candidate indices, seeded shuffle order
  std::vector<std::size_t> non_generic;

  std::size_t available() const { return generic.size() + non_generic.size(); }
};

/// Per-lemma selection state: the first `n_generic` / `n_non_generic` entries
/// of the pool's shuffled lists are in the group.
struct Pick {
  const LemmaPool* pool;
  std::size_t n_generic = 0;
  std::size_t n_non_generic = 0;
  std::size_t size() const { return n_generic + n_non_generic; }
};

inline std::optional<std::size_t> concrete_count_for(std::size_t groups, std::size_t n_concrete,
                                                     std::size_t n_abstract, const DatasetConfig& cfg) {
  if (groups == 0) return std::nullopt;
  const std::size_t lo = groups > n_abstract ? groups - n_abstract : 0;
  const std::size_t hi = std::min(groups, n_concrete);
  if (lo > hi) return std::nullopt;
  auto ideal = static_cast<std::size_t>(std::llround(cfg.concrete_share * static_cast<double>(groups)));
  std::size_t nc = std::clamp(ideal, lo, hi);
  double share = static_cast<double>(nc) / static_cast<double>(groups);
  if (std::abs(share - cfg.concrete_share) > cfg.concrete_share_tolerance + 1e-12) return std::nullopt;
  return nc;
}

/// Greedy: each group takes as many sentences as allowed, splitting labels so
/// the running GENERIC minus NON-GENERIC gap stays near zero.
inline long long build_greedy(std::vector<Pick>& picks, const DatasetConfig& cfg) {
  long long gap = 0;
  for (auto& p : picks) {
    const auto ag = static_cast<long long>(p.pool->generic.size());
    const auto an = static_cast<long long>(p.pool->non_generic.size());
    const long long size = std::min<long long>(cfg.group_size_max, ag + an);
    const long long lo = std::max<long long>(1, size - an);
    const long long hi = std::min<long long>(ag, size - 1);
    long long want = (size - gap) >= 0 ? (size - gap + 1) / 2 : -((gap - size) / 2);
    long long g = std::clamp(want, lo, hi);
    p.n_generic = static_cast<std::size_t>(g);
    p.n_non_generic = static_cast<std::size_t>(size - g);
    gap += g - (size - g);
  }
  return gap;
}

/// Local moves that shrink |gap|: swap a majority-label sentence for a
/// minority-label one, or drop a majority-label sentence from a group above
/// the minimum size. Every move strictly reduces |gap|.
inline long long repair(std::vector<Pick>& picks, long long gap, const DatasetConfig& cfg) {
  const long long tol = cfg.target_label_balance_tolerance;
  bool moved = true;
  while (std::llabs(gap) > tol && moved) {
    moved = false;
    const bool too_generic = gap > 0;
    for (auto& p : picks) {
      if (std::llabs(gap) <= tol) break;
      std::size_t& major = too_generic ? p.n_generic : p.n_non_generic;
      std::size_t& minor = too_generic ? p.n_non_generic : p.n_generic;
      const std::size_t minor_avail = too_generic ? p.pool->non_generic.size() : p.pool->generic.size();
      if (major <= 1) continue;
      if (std::llabs(gap) >= 2 && minor < minor_avail) {
        --major;
        ++minor;
        gap += too_generic ? -2 : 2;
        moved = true;
      } else if (p.size() > static_cast<std::size_t>(cfg.group_size_min)) {
        --major;
        gap += too_generic ? -1 : 1;
        moved = true;
      }
    }
  }
  return gap;
}

inline NounGroup materialize(const Pick& p, const std::vector<Sentence>& candidates) {
  std::vector<std::size_t> idx(p.pool->generic.begin(), p.pool->generic.begin() + p.n_generic);
  idx.insert(idx.end(), p.pool->non_generic.begin(), p.pool->non_generic.begin() + p.n_non_generic);
  std::sort(idx.begin(), idx.end());
  NounGroup g{p.pool->lemma, {}};
  for (auto i : idx) g.sentences.push_back(candidates[i]);
  return g;
}

}  // namespace detail

/// Draws a study dataset: noun groups of group_size_min..group_size_max
/// sentences, each with both labels, a bounded global label gap and a target
/// share of concrete lemmas. Deterministic in (candidates, config).
///
/// Lemma order is a seeded shuffle per concreteness class. Groups are filled
/// greedily, then repaired; if the gap is still too wide the chosen lemma
/// whose availability skews furthest toward the surplus label is swapped for
/// the next unused lemma of the same class, and the build is retried.
inline StudyDataset sample_dataset(const std::vector<Sentence>& candidates, const DatasetConfig& config) {
  config.validate();

  std::map<std::string, detail::LemmaPool> pools;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& s = candidates[i];
    if (!s.concreteness)
      throw Error(ErrorCode::invalid_input, "sentence '" + s.id + "' has unset concreteness; join the lexicon first",
                  {{"sentence_id", s.id}});
    auto& pool = pools[s.lemma];
    if (pool.lemma.empty()) {
      pool.lemma = s.lemma;
      pool.concreteness = *s.concreteness;
    } else if (pool.concreteness != *s.concreteness) {
      throw Error(ErrorCode::invalid_input, "lemma '" + s.lemma + "' has inconsistent concreteness scores");
    }
    (s.gold == Label::generic ? pool.generic : pool.non_generic).push_back(i);
  }

  std::vector<detail::LemmaPool*> concrete, abstract;
  std::size_t excluded = 0;
  for (auto& [lemma, pool] : pools) {
    if (pool.generic.empty() || pool.non_generic.empty() ||
        pool.available() < static_cast<std::size_t>(config.group_size_min)) {
      ++excluded;
      continue;
    }
    std::mt19937_64 rng(util::mix_seed(config.seed, util::seed_from_hex(util::sha256_hex(lemma))));
    std::shuffle(pool.generic.begin(), pool.generic.end(), rng);
    std::shuffle(pool.non_generic.begin(), pool.non_generic.end(), rng);
    (is_concrete(pool.concreteness, config.concreteness_threshold) ? concrete : abstract).push_back(&pool);
  }
  std::mt19937_64 order_rng(config.seed);
  std::shuffle(concrete.begin(), concrete.end(), order_rng);
  std::shuffle(abstract.begin(), abstract.end(), order_rng);

  const std::size_t eligible = concrete.size() + abstract.size();
  nlohmann::json pool_info = {{"eligible_lemmas", eligible},
                              {"concrete_lemmas", concrete.size()},
                              {"abstract_lemmas", abstract.size()},
                              {"excluded_lemmas", excluded}};

  std::size_t n_groups = 0, n_concrete = 0;
  if (config.n_groups > 0) {
    n_groups = static_cast<std::size_t>(config.n_groups);
    if (n_groups > eligible)
      throw Error(ErrorCode::infeasible,
                  "group count: need " + std::to_string(n_groups) + " eligible lemmas, best achievable " +
                      std::to_string(eligible),
                  pool_info);
    auto nc = detail::concrete_count_for(n_groups, concrete.size(), abstract.size(), config);
    if (!nc) {
      double best = std::clamp(config.concrete_share, 0.0, 1.0);
      std::size_t lo = n_groups > abstract.size() ? n_groups - abstract.size() : 0;
      std::size_t hi = std::min(n_groups, concrete.size());
      std::size_t ideal = static_cast<std::size_t>(std::llround(best * static_cast<double>(n_groups)));
      best = static_cast<double>(std::clamp(ideal, lo, hi)) / static_cast<double>(n_groups);
      throw Error(ErrorCode::infeasible, "concrete share: best achievable " + util::fixed(best, 3) + ", target " +
                                            util::fixed(config.concrete_share, 3) + " +/- " +
                                            util::fixed(config.concrete_share_tolerance, 3),
                  pool_info);
    }
    n_concrete = *nc;
  } else {
    for (std::size_t g = eligible; g > 0; --g) {
      if (auto nc = detail::concrete_count_for(g, concrete.size(), abstract.size(), config)) {
        n_groups = g;
        n_concrete = *nc;
        break;
      }
    }
    if (n_groups == 0)
      throw Error(ErrorCode::infeasible, "concrete share: no eligible lemma subset meets the target share", pool_info);
  }
  const std::size_t n_abstract = n_groups - n_concrete;

  std::vector<detail::LemmaPool*> chosen_c(concrete.begin(), concrete.begin() + n_concrete);
  std::vector<detail::LemmaPool*> spare_c(concrete.begin() + n_concrete, concrete.end());
  std::vector<detail::LemmaPool*> chosen_a(abstract.begin(), abstract.begin() + n_abstract);
  std::vector<detail::LemmaPool*> spare_a(abstract.begin() + n_abstract, abstract.end());

  long long best_gap = -1;
  const long long tol = config.target_label_balance_tolerance;
  for (;;) {
    std::vector<detail::Pick> picks;
    for (auto* p : chosen_c) picks.push_back({p});
    for (auto* p : chosen_a) picks.push_back({p});
    long long gap = detail::build_greedy(picks, config);
    gap = detail::repair(picks, gap, config);
    if (best_gap < 0 || std::llabs(gap) < best_gap) best_gap = std::llabs(gap);
    if (std::llabs(gap) <= tol) {
      StudyDataset out;
      out.config = config;
      for (const auto& p : picks) out.groups.push_back(detail::materialize(p, candidates));
      std::sort(out.groups.begin(), out.groups.end(),
                [](const NounGroup& a, const NounGroup& b) { return a.lemma < b.lemma; });
      return out;
    }

    // Backtrack: replace the most skewed chosen lemma that has a spare.
    const bool too_generic = gap > 0;
    auto skew = [&](const detail::LemmaPool* p) {
      auto g = static_cast<long long>(p->generic.size()), n = static_cast<long long>(p->non_generic.size());
      return too_generic ? g - n : n - g;
    };
    detail::LemmaPool** victim = nullptr;
    std::vector<detail::LemmaPool*>* spares = nullptr;
    for (auto* list : {&chosen_c, &chosen_a}) {
      auto& spare = list == &chosen_c ? spare_c : spare_a;
      if (spare.empty()) continue;
      for (auto& p : *list)
        if (!victim || skew(p) > skew(*victim)) {
          victim = &p;
          spares = &spare;
        }
    }
    if (!victim)
      throw Error(ErrorCode::infeasible,
                  "label balance: best achievable gap " + std::to_string(best_gap) + " exceeds tolerance " +
                      std::to_string(tol),
                  {{"best_gap", best_gap}, {"tolerance", tol}, {"pool", pool_info}});
    *victim = spares->front();
    spares->erase(spares->begin());
  }
}

}  // namespace genscale::corpus
