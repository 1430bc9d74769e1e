#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/ratings.hpp"
#include "genscale/stats/icc.hpp"

namespace genscale::stats {

/// Per-sentence means; a dimension with no ratings stays empty.
struct AggregatedItem {
  std::string sentence_id;
  std::optional<double> inc;
  std::optional<double> abs;
  std::size_t n_inc = 0;
  std::size_t n_abs = 0;

  std::optional<double> mean(Dimension d) const { return d == Dimension::inclusiveness ? inc : abs; }
  std::size_t count(Dimension d) const { return d == Dimension::inclusiveness ? n_inc : n_abs; }
};

inline void to_json(nlohmann::json& j, const AggregatedItem& a) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = {{"sentence_id", a.sentence_id}, {"inc", opt(a.inc)}, {"abs", opt(a.abs)},
       {"n_inc", a.n_inc}, {"n_abs", a.n_abs}};
}

/// Arithmetic mean per (sentence, dimension), ordered by sentence id.
inline std::vector<AggregatedItem> aggregate(const std::vector<RatingRecord>& records) {
  struct Acc {
    double sum[2] = {0, 0};
    std::size_t n[2] = {0, 0};
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.sentence_id];
    const int d = static_cast<int>(r.dimension);
    a.sum[d] += r.value;
    ++a.n[d];
  }
  std::vector<AggregatedItem> out;
  out.reserve(acc.size());
  for (const auto& [id, a] : acc) {
    AggregatedItem item{id, std::nullopt, std::nullopt, a.n[0], a.n[1]};
    if (a.n[0]) item.inc = a.sum[0] / static_cast<double>(a.n[0]);
    if (a.n[1]) item.abs = a.sum[1] / static_cast<double>(a.n[1]);
    out.push_back(item);
  }
  return out;
}

/// Collects one dimension's ratings into an items x k matrix (items ordered by
/// sentence id, ratings by rater id). Unequal rating counts are rejected.
inline RatingMatrix rating_matrix(const std::vector<RatingRecord>& records, Dimension dim) {
  std::map<std::string, std::map<std::string, double>> by_item;
  for (const auto& r : records)
    if (r.dimension == dim) by_item[r.sentence_id][r.rater_id] = r.value;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  for (const auto& [id, raters] : by_item) {
    ids.push_back(id);
    auto& row = rows.emplace_back();
    for (const auto& [rater, v] : raters) row.push_back(v);
  }
  auto m = RatingMatrix::from_rows(rows);
  return RatingMatrix(m.n(), m.k(), m.values(), std::move(ids));
}

}  // namespace genscale::stats
