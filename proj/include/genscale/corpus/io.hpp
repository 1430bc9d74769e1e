#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "genscale/corpus/types.hpp"
#include "genscale/util/delimited.hpp"
#include "genscale/util/format.hpp"
#include "genscale/util/hash.hpp"
#include "genscale/util/utf8.hpp"

namespace genscale::corpus {

using Lexicon = std::map<std::string, double>;

inline const std::vector<std::string>& corpus_columns() {
  static const std::vector<std::string> cols{"id", "text", "span_start", "span_end", "lemma", "gold"};
  return cols;
}

namespace detail {

[[noreturn]] inline void row_error(std::size_t row, const std::string& field, const std::string& what) {
  throw Error(ErrorCode::invalid_input, what + ", row " + std::to_string(row) + " (field " + field + ")",
              {{"row", row}, {"field", field}});
}

}  // namespace detail

/// Parses tab-separated corpus text. Rows are numbered from 1 after the
/// header; blank lines are skipped but still counted.
inline std::vector<Sentence> parse_corpus(std::string_view text) {
  auto lines = util::split_lines(text);
  if (lines.empty() || lines.front().empty())
    throw Error(ErrorCode::invalid_input, "corpus: missing header row");
  auto header = util::split_record(lines.front(), '\t');
  if (header != corpus_columns())
    throw Error(ErrorCode::invalid_input, "corpus: header must be id, text, span_start, span_end, lemma, gold");

  std::vector<Sentence> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t row = i;
    if (lines[i].empty()) continue;
    auto f = util::split_record(lines[i], '\t');
    if (f.size() != 6)
      detail::row_error(row, "*", "expected 6 columns, found " + std::to_string(f.size()));

    Sentence s;
    s.id = f[0];
    if (s.id.empty()) detail::row_error(row, "id", "empty id");
    s.text = f[1];
    if (s.text.empty()) detail::row_error(row, "text", "empty text");
    auto start = util::parse_int<std::size_t>(f[2]);
    if (!start) detail::row_error(row, "span_start", "span_start is not a non-negative integer");
    auto end = util::parse_int<std::size_t>(f[3]);
    if (!end) detail::row_error(row, "span_end", "span_end is not a non-negative integer");
    if (*end <= *start) detail::row_error(row, "span_end", "empty span");
    if (*end > util::codepoint_count(s.text)) detail::row_error(row, "span_end", "span out of bounds");
    s.target_span = {*start, *end};
    s.lemma = f[4];
    if (s.lemma.empty()) detail::row_error(row, "lemma", "empty lemma");
    auto gold = parse_label(f[5]);
    if (!gold) detail::row_error(row, "gold", "gold label must be GENERIC or NON-GENERIC");
    s.gold = *gold;
    if (!seen.insert(s.id).second)
      throw Error(ErrorCode::invalid_input, "duplicate id '" + s.id + "', row " + std::to_string(row),
                  {{"row", row}, {"field", "id"}});
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Sentence> load_corpus(const std::string& path) { return parse_corpus(util::read_file(path)); }

inline std::string format_corpus(const std::vector<Sentence>& sentences) {
  std::string out = "id\ttext\tspan_start\tspan_end\tlemma\tgold\n";
  for (const auto& s : sentences) {
    out += s.id + '\t' + util::quote_field(s.text, '\t') + '\t' + std::to_string(s.target_span.start) + '\t' +
           std::to_string(s.target_span.end) + '\t' + s.lemma + '\t' + std::string(to_string(s.gold)) + '\n';
  }
  return out;
}

/// Comma-separated `lemma,concreteness`. A first line whose second field is
/// not numeric is treated as a header.
inline Lexicon parse_lexicon(std::string_view text) {
  Lexicon lex;
  auto lines = util::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = util::split_record(lines[i], ',');
    if (f.size() < 2) throw Error(ErrorCode::invalid_input, "lexicon: expected 2 columns, line " + std::to_string(i + 1));
    auto score = util::parse_double(f[1]);
    if (!score) {
      if (i == 0) continue;
      throw Error(ErrorCode::invalid_input, "lexicon: concreteness is not a number, line " + std::to_string(i + 1));
    }
    if (*score < 1.0 || *score > 5.0)
      throw Error(ErrorCode::invalid_input, "lexicon: concreteness outside [1,5], line " + std::to_string(i + 1));
    lex[f[0]] = *score;
  }
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) { return parse_lexicon(util::read_file(path)); }

/// Attaches the per-lemma concreteness score to every sentence. All-or-nothing:
/// if any lemma is missing, nothing is joined and every missing lemma is listed.
inline std::vector<Sentence> join_concreteness(std::vector<Sentence> sentences, const Lexicon& lexicon) {
  std::set<std::string> missing;
  for (const auto& s : sentences)
    if (!lexicon.count(s.lemma)) missing.insert(s.lemma);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::not_found, "lemmas missing from lexicon: " + list,
                {{"missing_lemmas", std::vector<std::string>(missing.begin(), missing.end())}});
  }
  for (auto& s : sentences) s.concreteness = lexicon.at(s.lemma);
  return sentences;
}

inline void save_dataset(const StudyDataset& d, const std::string& path) {
  util::write_file(path, to_document(d).dump(2) + "\n");
}

inline StudyDataset load_dataset(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, "dataset " + path + ": " + e.what());
  }
  return from_document(doc);
}

}  // namespace genscale::corpus
