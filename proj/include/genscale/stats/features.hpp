#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genscale/stats/aggregate.hpp"

namespace genscale::stats {

struct LabeledFeatures {
  Eigen::MatrixXd x;
  std::vector<int> y;  // 1 = GENERIC
  std::vector<std::string> sentence_ids;
  std::vector<std::string> feature_names;
};

/// One row per aggregated item, columns = requested dimension means.
inline LabeledFeatures feature_matrix(const std::vector<AggregatedItem>& items, const std::map<std::string, Label>& gold,
                                      const std::vector<Dimension>& dims) {
  LabeledFeatures out;
  for (auto d : dims) out.feature_names.emplace_back(d == Dimension::inclusiveness ? "INC" : "ABS");
  out.x.resize(static_cast<Eigen::Index>(items.size()), static_cast<Eigen::Index>(dims.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    auto it = gold.find(item.sentence_id);
    if (it == gold.end()) throw Error(ErrorCode::not_found, "no gold label for sentence '" + item.sentence_id + "'");
    for (std::size_t c = 0; c < dims.size(); ++c) {
      auto m = item.mean(dims[c]);
      if (!m)
        throw Error(ErrorCode::invalid_input, "sentence '" + item.sentence_id + "' lacks " +
                                                  std::string(to_string(dims[c])) + " ratings");
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = *m;
    }
    out.y.push_back(it->second == Label::generic ? 1 : 0);
    out.sentence_ids.push_back(item.sentence_id);
  }
  return out;
}

}  // namespace genscale::stats
