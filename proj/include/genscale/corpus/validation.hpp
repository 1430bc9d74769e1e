#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "genscale/corpus/types.hpp"

namespace genscale::corpus {

struct ConstraintCheck {
  std::string name;
  bool passed = false;
  double measured = 0;
  std::string requirement;
};

struct ValidationReport {
  std::vector<ConstraintCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const ConstraintCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline void to_json(nlohmann::json& j, const ConstraintCheck& c) {
  j = {{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"requirement", c.requirement}};
}

inline void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = {{"passed", r.passed()}, {"checks", r.checks}};
}

/// Measures every dataset constraint; never throws on a bad dataset.
inline ValidationReport validate_dataset(const StudyDataset& d, const DatasetConfig& cfg) {
  ValidationReport r;
  std::size_t smallest = 0, largest = 0, missing_label = 0, wrong_lemma = 0, duplicates = 0;
  std::size_t n_generic = 0, n_non_generic = 0, n_concrete = 0, unset = 0;
  std::set<std::string> lemmas;
  bool first = true;
  for (const auto& g : d.groups) {
    const auto n = g.sentences.size();
    smallest = first ? n : std::min(smallest, n);
    largest = first ? n : std::max(largest, n);
    first = false;
    const auto gen = g.count(Label::generic);
    n_generic += gen;
    n_non_generic += n - gen;
    missing_label += (gen == 0 || gen == n);
    if (!lemmas.insert(g.lemma).second) ++duplicates;
    bool concrete = false, has_score = false;
    for (const auto& s : g.sentences) {
      wrong_lemma += s.lemma != g.lemma;
      if (s.concreteness) {
        has_score = true;
        concrete = is_concrete(*s.concreteness, cfg.concreteness_threshold);
      }
    }
    if (!has_score) ++unset;
    n_concrete += concrete;
  }

  auto add = [&](std::string name, bool ok, double measured, std::string req) {
    r.checks.push_back({std::move(name), ok, measured, std::move(req)});
  };
  const auto min_req = static_cast<std::size_t>(cfg.group_size_min);
  const auto max_req = static_cast<std::size_t>(cfg.group_size_max);
  add("group size >= " + std::to_string(min_req), !d.groups.empty() && smallest >= min_req,
      static_cast<double>(smallest), "smallest group has at least group_size_min sentences");
  add("group size <= " + std::to_string(max_req), !d.groups.empty() && largest <= max_req,
      static_cast<double>(largest), "largest group has at most group_size_max sentences");
  add("both labels per group", !d.groups.empty() && missing_label == 0, static_cast<double>(missing_label),
      "every group has at least one GENERIC and one NON-GENERIC sentence");
  add("unique lemmas", duplicates == 0, static_cast<double>(duplicates), "no lemma appears in two groups");
  add("group lemma consistency", wrong_lemma == 0, static_cast<double>(wrong_lemma),
      "every sentence carries its group's lemma");
  const auto gap = std::llabs(static_cast<long long>(n_generic) - static_cast<long long>(n_non_generic));
  add("label balance", gap <= cfg.target_label_balance_tolerance, static_cast<double>(gap),
      "|#GENERIC - #NON-GENERIC| <= " + std::to_string(cfg.target_label_balance_tolerance));
  const double share =
      d.groups.empty() ? 0.0 : static_cast<double>(n_concrete) / static_cast<double>(d.groups.size());
  add("concrete share",
      !d.groups.empty() && unset == 0 &&
          std::abs(share - cfg.concrete_share) <= cfg.concrete_share_tolerance + 1e-12,
      share, "share of concrete lemmas within concrete_share +/- concrete_share_tolerance");
  if (cfg.n_groups > 0)
    add("group count", d.groups.size() == static_cast<std::size_t>(cfg.n_groups),
        static_cast<double>(d.groups.size()), "exactly n_groups noun groups");
  return r;
}

}  // namespace genscale::corpus
