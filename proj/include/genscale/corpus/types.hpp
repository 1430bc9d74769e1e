#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/types.hpp"
#include "genscale/util/hash.hpp"

namespace genscale::corpus {

/// Half-open code-point range of the target noun inside the sentence text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct Sentence {
  std::string id;
  std::string text;
  std::string lemma;
  Span target_span;
  Label gold = Label::generic;
  std::optional<double> concreteness;  // unset until join_concreteness

  bool operator==(const Sentence&) const = default;
};

/// Concrete iff strictly above the threshold; a score equal to the threshold
/// is abstract.
constexpr bool is_concrete(double concreteness, double threshold) { return concreteness > threshold; }

struct NounGroup {
  std::string lemma;
  std::vector<Sentence> sentences;

  std::size_t count(Label label) const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.gold == label;
    return n;
  }
};

struct DatasetConfig {
  int group_size_min = 4;
  int group_size_max = 8;
  int target_label_balance_tolerance = 5;
  double concrete_share = 0.70;
  double concrete_share_tolerance = 0.05;
  double concreteness_threshold = 3.0;
  /// Number of noun groups to draw; 0 takes every eligible lemma the
  /// concrete-share constraint allows.
  int n_groups = 60;
  std::uint64_t seed = 0;

  void validate() const {
    if (group_size_min < 1 || group_size_min > group_size_max)
      throw Error(ErrorCode::invalid_input, "dataset config: need 1 <= group_size_min <= group_size_max");
    if (group_size_min < 2)
      throw Error(ErrorCode::invalid_input, "dataset config: groups need room for both labels (min >= 2)");
    if (target_label_balance_tolerance < 0)
      throw Error(ErrorCode::invalid_input, "dataset config: balance tolerance must be >= 0");
    if (!(concrete_share >= 0 && concrete_share <= 1) ||
        !(concrete_share_tolerance >= 0 && concrete_share_tolerance <= 1))
      throw Error(ErrorCode::invalid_input, "dataset config: shares and tolerances must lie in [0,1]");
    if (n_groups < 0) throw Error(ErrorCode::invalid_input, "dataset config: n_groups must be >= 0");
  }
};

struct StudyDataset {
  std::vector<NounGroup> groups;
  DatasetConfig config;

  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.sentences.size();
    return n;
  }
};

// ---- JSON ----------------------------------------------------------------

inline void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = {{"group_size_min", c.group_size_min},
       {"group_size_max", c.group_size_max},
       {"target_label_balance_tolerance", c.target_label_balance_tolerance},
       {"concrete_share", c.concrete_share},
       {"concrete_share_tolerance", c.concrete_share_tolerance},
       {"concreteness_threshold", c.concreteness_threshold},
       {"n_groups", c.n_groups},
       {"seed", c.seed}};
}

/// Missing keys keep their defaults, so partial config files are accepted.
inline void from_json(const nlohmann::json& j, DatasetConfig& c) {
  c.group_size_min = j.value("group_size_min", c.group_size_min);
  c.group_size_max = j.value("group_size_max", c.group_size_max);
  c.target_label_balance_tolerance = j.value("target_label_balance_tolerance", c.target_label_balance_tolerance);
  c.concrete_share = j.value("concrete_share", c.concrete_share);
  c.concrete_share_tolerance = j.value("concrete_share_tolerance", c.concrete_share_tolerance);
  c.concreteness_threshold = j.value("concreteness_threshold", c.concreteness_threshold);
  c.n_groups = j.value("n_groups", c.n_groups);
  c.seed = j.value("seed", c.seed);
}

inline void to_json(nlohmann::json& j, const Sentence& s) {
  j = {{"id", s.id},
       {"text", s.text},
       {"lemma", s.lemma},
       {"target_span", {s.target_span.start, s.target_span.end}},
       {"gold", std::string(to_string(s.gold))},
       {"concreteness", s.concreteness ? nlohmann::json(*s.concreteness) : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, Sentence& s) {
  s.id = j.at("id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.lemma = j.at("lemma").get<std::string>();
  s.target_span = {j.at("target_span").at(0).get<std::size_t>(), j.at("target_span").at(1).get<std::size_t>()};
  auto gold = parse_label(j.at("gold").get<std::string>());
  if (!gold) throw Error(ErrorCode::invalid_input, "sentence " + s.id + ": bad gold label");
  s.gold = *gold;
  const auto& c = j.at("concreteness");
  s.concreteness = c.is_null() ? std::nullopt : std::optional<double>(c.get<double>());
}

inline nlohmann::json dataset_body(const StudyDataset& d) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : d.groups) groups.push_back({{"lemma", g.lemma}, {"sentences", g.sentences}});
  return {{"config", d.config}, {"groups", groups}};
}

/// SHA-256 over the canonical serialization of config and groups.
inline std::string content_hash(const StudyDataset& d) { return util::sha256_hex(dataset_body(d).dump()); }

inline nlohmann::json to_document(const StudyDataset& d) {
  auto doc = dataset_body(d);
  doc["content_hash"] = content_hash(d);
  doc["n_groups"] = d.groups.size();
  doc["n_sentences"] = d.sentence_count();
  return doc;
}

/// Parses a dataset document; a stored content_hash must match the content.
inline StudyDataset from_document(const nlohmann::json& doc) {
  StudyDataset d;
  try {
    d.config = doc.at("config").get<DatasetConfig>();
    for (const auto& g : doc.at("groups")) {
      NounGroup group;
      group.lemma = g.at("lemma").get<std::string>();
      group.sentences = g.at("sentences").get<std::vector<Sentence>>();
      d.groups.push_back(std::move(group));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed dataset document: ") + e.what());
  }
  if (doc.contains("content_hash") && doc["content_hash"].get<std::string>() != content_hash(d))
    throw Error(ErrorCode::invalid_input, "dataset content_hash does not match its content");
  return d;
}

}  // namespace genscale::corpus
