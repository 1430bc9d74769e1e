#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "genscale/genscale.hpp"

namespace genscale::testkit {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("genscale-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<corpus::Sentence> joined_pool(const sim::PoolShape& shape) {
  auto pool = sim::synthetic_pool(shape);
  return corpus::join_concreteness(pool.sentences, pool.lexicon);
}

/// 60 groups, 324 sentences (165 NON-GENERIC, 159 GENERIC).
inline corpus::StudyDataset full_dataset(std::uint64_t seed = 1) {
  corpus::DatasetConfig cfg;
  cfg.target_label_balance_tolerance = 6;
  cfg.seed = seed;
  return corpus::sample_dataset(joined_pool({}), cfg);
}

/// 12 groups of 4..6 sentences; two batches of six.
inline corpus::StudyDataset small_dataset(std::uint64_t seed = 1) {
  sim::PoolShape shape;
  shape.eligible_lemmas = 12;
  shape.sentences = 60;
  shape.generic = 30;
  shape.seed = seed;
  corpus::DatasetConfig cfg;
  cfg.n_groups = 12;
  cfg.concrete_share_tolerance = 0.1;
  cfg.seed = seed;
  return corpus::sample_dataset(joined_pool(shape), cfg);
}

inline std::vector<service::RatingItem> full_group(const corpus::StudyDataset& d, const std::string& lemma,
                                                   double value = 0.5) {
  std::vector<service::RatingItem> items;
  for (const auto& g : d.groups)
    if (g.lemma == lemma)
      for (const auto& s : g.sentences) items.push_back({s.id, value});
  return items;
}

inline stats::RatingMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n * k);
  for (auto& x : v) x = u(rng);
  return stats::RatingMatrix(n, k, std::move(v));
}

}  // namespace genscale::testkit
