#pragma once

#include <algorithm>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "genscale/corpus/types.hpp"
#include "genscale/service/config.hpp"

namespace genscale::service {

/// A set of noun groups (by lemma) presented to one rater.
struct Batch {
  std::string id;
  std::vector<std::string> group_ids;
  std::size_t size() const { return group_ids.size(); }
};

inline void to_json(nlohmann::json& j, const Batch& b) { j = {{"id", b.id}, {"group_ids", b.group_ids}}; }

/// Fewest-batches composition of `total` from the allowed sizes, largest
/// batches first; empty if no composition exists.
inline std::vector<int> batch_composition(std::size_t total, std::vector<int> sizes) {
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  constexpr int kNone = std::numeric_limits<int>::max();
  std::vector<int> fewest(total + 1, kNone), last(total + 1, 0);
  fewest[0] = 0;
  for (std::size_t s = 1; s <= total; ++s)
    for (int size : sizes) {
      const auto u = static_cast<std::size_t>(size);
      if (u <= s && fewest[s - u] != kNone && fewest[s - u] + 1 <= fewest[s]) {
        fewest[s] = fewest[s - u] + 1;
        last[s] = size;  // ascending loop: ties prefer the larger size
      }
    }
  if (total == 0 || fewest[total] == kNone) return {};
  std::vector<int> parts;
  for (std::size_t s = total; s > 0; s -= static_cast<std::size_t>(last[s])) parts.push_back(last[s]);
  std::sort(parts.rbegin(), parts.rend());
  return parts;
}

/// Partitions the dataset's groups into batches of allowed sizes. Group order
/// is a shuffle seeded by the dataset's content hash.
inline std::vector<Batch> create_batches(const corpus::StudyDataset& dataset, const StudyConfig& config) {
  const auto parts = batch_composition(dataset.groups.size(), config.batch_sizes);
  if (parts.empty()) {
    std::string sizes;
    for (int s : config.batch_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
    throw Error(ErrorCode::infeasible,
                "no partition of " + std::to_string(dataset.groups.size()) + " into {" + sizes + "}",
                {{"groups", dataset.groups.size()}, {"batch_sizes", config.batch_sizes}});
  }
  std::vector<std::string> lemmas;
  for (const auto& g : dataset.groups) lemmas.push_back(g.lemma);
  std::mt19937_64 rng(util::seed_from_hex(corpus::content_hash(dataset)));
  std::shuffle(lemmas.begin(), lemmas.end(), rng);

  std::vector<Batch> batches;
  std::size_t next = 0;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    char id[16];
    std::snprintf(id, sizeof id, "b%02zu", b + 1);
    Batch batch{id, {}};
    for (int i = 0; i < parts[b]; ++i) batch.group_ids.push_back(lemmas[next++]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace genscale::service
