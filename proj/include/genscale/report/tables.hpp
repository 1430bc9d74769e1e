#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "genscale/corpus/types.hpp"
#include "genscale/stats/aggregate.hpp"
#include "genscale/stats/cross_validation.hpp"
#include "genscale/util/delimited.hpp"
#include "genscale/util/format.hpp"
#include "genscale/util/utf8.hpp"

namespace genscale::report {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + util::quote_field(cells[i]);
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  /// Space-padded columns; widths count code points.
  std::string to_text() const {
    std::vector<std::size_t> width(header.size(), 0);
    auto measure = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size() && i < width.size(); ++i)
        width[i] = std::max(width[i], util::codepoint_count(cells[i]));
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      std::string l;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        l += cells[i];
        if (i + 1 < cells.size()) l += std::string(width[i] - util::codepoint_count(cells[i]) + 2, ' ');
      }
      out += l + '\n';
    };
    line(header);
    std::size_t rule = 0;
    for (auto w : width) rule += w + 2;
    out += std::string(rule > 2 ? rule - 2 : 0, '-') + '\n';
    for (const auto& r : rows) line(r);
    return out;
  }
};

/// Accuracy and per-class precision/recall/F1 (outer-fold means), two
/// decimals, one row per (predictor set, label). Known predictor sets come
/// first in the order INC, ABS, INC+ABS.
inline Table metrics_table(const std::map<std::string, stats::CVReport>& reports) {
  Table t{{"predictors", "accuracy", "label", "precision", "recall", "f1"}, {}};
  std::vector<std::string> order;
  for (const char* known : {"INC", "ABS", "INC+ABS"})
    if (reports.count(known)) order.emplace_back(known);
  for (const auto& [name, r] : reports)
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  for (const auto& name : order) {
    const auto& m = reports.at(name).mean;
    const auto acc = util::fixed(m.accuracy, 2);
    t.rows.push_back({name, acc, "NON-GENERIC", util::fixed(m.non_generic.precision, 2),
                      util::fixed(m.non_generic.recall, 2), util::fixed(m.non_generic.f1, 2)});
    t.rows.push_back({name, acc, "GENERIC", util::fixed(m.generic.precision, 2), util::fixed(m.generic.recall, 2),
                      util::fixed(m.generic.f1, 2)});
  }
  return t;
}

/// Sentence text with the target span wrapped in the given markers.
inline std::string mark_target(const corpus::Sentence& s, const std::string& open = "[[",
                               const std::string& close = "]]") {
  const auto b = util::byte_offset(s.text, s.target_span.start);
  const auto e = util::byte_offset(s.text, s.target_span.end);
  if (!b || !e || *e <= *b) throw Error(ErrorCode::invalid_input, "sentence '" + s.id + "': target span out of bounds");
  return s.text.substr(0, *b) + open + s.text.substr(*b, *e - *b) + close + s.text.substr(*e);
}

inline Table example_table(const std::vector<stats::AggregatedItem>& items,
                           const std::vector<corpus::Sentence>& sentences, const std::vector<std::string>& select) {
  Table t{{"sentence", "INC", "ABS", "label"}, {}};
  std::map<std::string, const stats::AggregatedItem*> by_id;
  for (const auto& i : items) by_id[i.sentence_id] = &i;
  std::map<std::string, const corpus::Sentence*> text;
  for (const auto& s : sentences) text[s.id] = &s;
  auto cell = [](const std::optional<double>& v) { return v ? util::fixed(*v, 2) : std::string("NA"); };
  for (const auto& id : select) {
    auto s = text.find(id);
    if (s == text.end()) throw Error(ErrorCode::not_found, "example table: unknown sentence '" + id + "'");
    auto a = by_id.find(id);
    stats::AggregatedItem empty;
    empty.sentence_id = id;
    const auto& item = a == by_id.end() ? empty : *a->second;
    t.rows.push_back({mark_target(*s->second), cell(item.inc), cell(item.abs), std::string(to_string(s->second->gold))});
  }
  return t;
}

}  // namespace genscale::report
