#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "genscale/corpus/io.hpp"
#include "genscale/util/utf8.hpp"

namespace genscale::sim {

/// Shape of a synthetic candidate pool.
struct PoolShape {
  std::size_t eligible_lemmas = 60;
  std::size_t sentences = 324;       // spread over eligible lemmas, 4..8 each
  std::size_t generic = 159;         // of `sentences`
  double concrete_share = 0.70;      // of eligible lemmas
  std::size_t single_label_lemmas = 5;  // distractors the sampler must exclude
  std::size_t undersized_lemmas = 3;    // distractors with fewer than 4 sentences
  std::uint64_t seed = 0;
};

struct SyntheticPool {
  std::vector<corpus::Sentence> sentences;
  corpus::Lexicon lexicon;
};

namespace detail {

inline corpus::Sentence make_sentence(const std::string& id, const std::string& lemma, Label gold, std::size_t variant) {
  static const char* generic_frames[] = {"Every {} needs some care to last.", "A {} is usually easy to recognise.",
                                         "In most places the {} plays a familiar role.", "Each {} differs a little from the next."};
  static const char* particular_frames[] = {"Yesterday the {} by the window was moved.", "She pointed at that {} and laughed.",
                                            "Our {} arrived late on Tuesday.", "He described the {} he saw this morning."};
  const std::string frame = (gold == Label::generic ? generic_frames : particular_frames)[variant % 4];
  const auto at = frame.find("{}");
  corpus::Sentence s;
  s.id = id;
  s.text = frame.substr(0, at) + lemma + frame.substr(at + 2);
  s.lemma = lemma;
  const auto start = util::codepoint_count(frame.substr(0, at));
  s.target_span = {start, start + util::codepoint_count(lemma)};
  s.gold = gold;
  return s;
}

}  // namespace detail

/// Deterministic candidate pool with the requested shape plus distractor
/// lemmas, and a lexicon covering every lemma. Concrete lemmas score in
/// (3, 5]; abstract ones in [1, 3], including one at exactly 3.
inline SyntheticPool synthetic_pool(const PoolShape& shape) {
  const std::size_t L = shape.eligible_lemmas;
  if (L == 0 || shape.sentences < 4 * L || shape.sentences > 8 * L)
    throw Error(ErrorCode::invalid_input, "pool shape: sentences must lie in [4, 8] per eligible lemma");
  if (shape.generic < L || shape.sentences - shape.generic < L)
    throw Error(ErrorCode::invalid_input, "pool shape: each lemma needs one sentence of each label");
  std::mt19937_64 rng(shape.seed);

  // sizes: start at 4, hand out the remainder one at a time to random lemmas below 8
  std::vector<std::size_t> size(L, 4);
  for (std::size_t left = shape.sentences - 4 * L; left > 0;) {
    const auto i = std::uniform_int_distribution<std::size_t>(0, L - 1)(rng);
    if (size[i] < 8) {
      ++size[i];
      --left;
    }
  }
  // generic counts: start at 1, add to random lemmas that still have room
  std::vector<std::size_t> gen(L, 1);
  for (std::size_t left = shape.generic - L; left > 0;) {
    const auto i = std::uniform_int_distribution<std::size_t>(0, L - 1)(rng);
    if (gen[i] + 1 < size[i]) {
      ++gen[i];
      --left;
    }
  }

  SyntheticPool pool;
  const auto n_concrete = static_cast<std::size_t>(std::llround(shape.concrete_share * static_cast<double>(L)));
  std::uniform_real_distribution<double> concrete_score(3.05, 5.0), abstract_score(1.0, 2.95);
  std::size_t next_id = 1;
  auto add_lemma = [&](const std::string& lemma, std::size_t n_gen, std::size_t n_non, double score) {
    pool.lexicon[lemma] = score;
    for (std::size_t j = 0; j < n_gen + n_non; ++j) {
      const auto gold = j < n_gen ? Label::generic : Label::non_generic;
      char id[16];
      std::snprintf(id, sizeof id, "s%04zu", next_id++);
      pool.sentences.push_back(detail::make_sentence(id, lemma, gold, j));
    }
  };
  for (std::size_t i = 0; i < L; ++i) {
    char lemma[32];
    std::snprintf(lemma, sizeof lemma, "noun%03zu", i + 1);
    double score = i < n_concrete ? concrete_score(rng) : abstract_score(rng);
    if (i == n_concrete && i < L) score = 3.0;  // boundary: abstract
    add_lemma(lemma, gen[i], size[i] - gen[i], std::round(score * 100) / 100);
  }
  for (std::size_t i = 0; i < shape.single_label_lemmas; ++i)
    add_lemma("onelabel" + std::to_string(i + 1), i % 2 ? 5 : 0, i % 2 ? 0 : 5, 4.0);
  for (std::size_t i = 0; i < shape.undersized_lemmas; ++i)
    add_lemma("rare" + std::to_string(i + 1), 1, 2, 2.0);

  std::shuffle(pool.sentences.begin(), pool.sentences.end(), rng);
  return pool;
}

}  // namespace genscale::sim
