#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/corpus/types.hpp"
#include "genscale/service/study.hpp"
#include "genscale/stats/icc.hpp"
#include "genscale/util/hash.hpp"

namespace genscale::sim {

enum class UnitPolicy { clamp_to_unit, reject_out_of_range };

/// Synthetic raters: item true score ~ Normal(mean, sigma_item^2), each rating
/// = true score + Normal(0, sigma_noise^2).
struct SimConfig {
  std::size_t n_items = 324;
  std::size_t k = 30;
  double sigma_item = 0.15;
  double sigma_noise = 0.15;
  double mean = 0.5;
  UnitPolicy policy = UnitPolicy::clamp_to_unit;
  std::uint64_t seed = 0;
  /// When both are set, the true-score mean depends on the gold label
  /// (simulate_study only).
  std::optional<double> generic_mean;
  std::optional<double> non_generic_mean;

  void validate() const {
    if (!(sigma_item >= 0) || !(sigma_noise >= 0))
      throw Error(ErrorCode::invalid_input, "sim config: sigmas must be >= 0");
    if (!(mean >= 0 && mean <= 1)) throw Error(ErrorCode::invalid_input, "sim config: mean must lie in [0,1]");
    if (generic_mean.has_value() != non_generic_mean.has_value())
      throw Error(ErrorCode::invalid_input, "sim config: set both gold-conditioned means or neither");
  }
};

inline void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"n_items", c.n_items},
       {"k", c.k},
       {"sigma_item", c.sigma_item},
       {"sigma_noise", c.sigma_noise},
       {"mean", c.mean},
       {"policy", c.policy == UnitPolicy::clamp_to_unit ? "clamp_to_unit" : "reject_out_of_range"},
       {"seed", c.seed}};
  if (c.generic_mean) j["generic_mean"] = *c.generic_mean;
  if (c.non_generic_mean) j["non_generic_mean"] = *c.non_generic_mean;
}

inline void from_json(const nlohmann::json& j, SimConfig& c) {
  c.n_items = j.value("n_items", c.n_items);
  c.k = j.value("k", c.k);
  c.sigma_item = j.value("sigma_item", c.sigma_item);
  c.sigma_noise = j.value("sigma_noise", c.sigma_noise);
  c.mean = j.value("mean", c.mean);
  const auto policy = j.value("policy", std::string("clamp_to_unit"));
  if (policy == "clamp_to_unit") c.policy = UnitPolicy::clamp_to_unit;
  else if (policy == "reject_out_of_range") c.policy = UnitPolicy::reject_out_of_range;
  else throw Error(ErrorCode::invalid_input, "sim config: unknown policy '" + policy + "'");
  c.seed = j.value("seed", c.seed);
  if (j.contains("generic_mean")) c.generic_mean = j["generic_mean"].get<double>();
  if (j.contains("non_generic_mean")) c.non_generic_mean = j["non_generic_mean"].get<double>();
}

namespace detail {

/// Draws true + noise under the unit-interval policy. Returns nullopt for a
/// rejected draw.
inline std::optional<double> draw_rating(double truth, double sigma_noise, UnitPolicy policy, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double v = truth + sigma_noise * noise(rng);
  if (v >= 0.0 && v <= 1.0) return v;
  if (policy == UnitPolicy::clamp_to_unit) return std::clamp(v, 0.0, 1.0);
  return std::nullopt;
}

}  // namespace detail

/// Items x k matrix of synthetic ratings. Under reject_out_of_range, an
/// out-of-range rating is redrawn; if more than half of all draws are
/// rejected the parameters are refused.
inline stats::RatingMatrix simulate_matrix(const SimConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const std::size_t needed = config.n_items * config.k;
  std::vector<double> values;
  values.reserve(needed);
  std::size_t draws = 0, rejected = 0;
  for (std::size_t i = 0; i < config.n_items; ++i) {
    const double truth = config.mean + config.sigma_item * unit(rng);
    for (std::size_t j = 0; j < config.k; ++j) {
      for (;;) {
        ++draws;
        if (auto v = detail::draw_rating(truth, config.sigma_noise, config.policy, rng)) {
          values.push_back(*v);
          break;
        }
        ++rejected;
        if (rejected > needed)  // more rejections than the whole matrix needs: > 50% of draws
          throw Error(ErrorCode::invalid_input, "parameters incompatible with unit interval");
      }
    }
  }
  if (2 * rejected > draws) throw Error(ErrorCode::invalid_input, "parameters incompatible with unit interval");
  return stats::RatingMatrix(config.n_items, config.k, std::move(values));
}

/// Per-dimension rater models for a full study.
struct StudySimConfig {
  SimConfig inclusiveness;
  SimConfig abstractness;
  std::uint64_t seed = 0;
  std::size_t workers = 1;  // > 1 issues requests from concurrent threads

  const SimConfig& of(Dimension d) const { return d == Dimension::inclusiveness ? inclusiveness : abstractness; }
};

/// True score of one sentence on one dimension; a pure function of
/// (seed, sentence id, dimension, gold).
inline double true_score(const SimConfig& cfg, std::uint64_t seed, const corpus::Sentence& s, Dimension dim) {
  std::mt19937_64 rng(util::mix_seed(seed ^ util::seed_from_hex(util::sha256_hex(s.id)), static_cast<std::uint64_t>(dim)));
  std::normal_distribution<double> unit(0.0, 1.0);
  double mean = cfg.mean;
  if (cfg.generic_mean && cfg.non_generic_mean) mean = s.gold == Label::generic ? *cfg.generic_mean : *cfg.non_generic_mean;
  return mean + cfg.sigma_item * unit(rng);
}

/// Plays simulated raters against a study service through `client` (in-process
/// or HTTP) until every slot is filled; returns the service's CSV export.
/// With one worker the run is deterministic in the seeds.
template <class Client>
std::string simulate_study(const corpus::StudyDataset& dataset, const StudySimConfig& config, Client& client) {
  config.inclusiveness.validate();
  config.abstractness.validate();
  std::unordered_map<std::string, const corpus::Sentence*> sentences;
  for (const auto& g : dataset.groups)
    for (const auto& s : g.sentences) sentences[s.id] = &s;

  std::array<std::unordered_map<std::string, double>, 2> truth;
  for (auto dim : kDimensions)
    for (const auto& [id, s] : sentences)
      truth[static_cast<std::size_t>(dim)][id] = true_score(config.of(dim), config.seed, *s, dim);

  std::atomic<bool> done{false};
  std::mutex error_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    try {
      while (!done.load()) {
        nlohmann::json assignment;
        try {
          assignment = client.register_rater();
        } catch (const Error& e) {
          if (e.code() != ErrorCode::study_full) throw;
          done = true;
          break;
        }
        const auto rater = assignment.at("rater_id").get<std::string>();
        const auto dim = *parse_dimension(assignment.at("dimension").get<std::string>());
        const auto& model = config.of(dim);
        std::mt19937_64 rng(util::mix_seed(config.seed, util::seed_from_hex(util::sha256_hex(rater))));
        const auto task = client.get_task(rater);
        for (const auto& group : task.at("groups")) {
          std::vector<service::RatingItem> items;
          for (const auto& s : group.at("sentences")) {
            const std::string id = s.at("sentence_id");
            const double t = truth[static_cast<std::size_t>(dim)].at(id);
            std::optional<double> v;
            for (int attempt = 0; attempt < 1000 && !v; ++attempt)
              v = detail::draw_rating(t, model.sigma_noise, model.policy, rng);
            if (!v) throw Error(ErrorCode::invalid_input, "parameters incompatible with unit interval");
            items.push_back({id, *v});
          }
          client.submit(rater, std::string(group.at("group_id")), items);
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!failure) failure = std::current_exception();
      done = true;
    }
  };

  if (config.workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < config.workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return client.export_csv();
}

}  // namespace genscale::sim
