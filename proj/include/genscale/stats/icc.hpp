#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/error.hpp"

namespace genscale::stats {

/// n items x k ratings, row-major. Raters are not tracked across items
/// (one-way design): column j of two rows need not be the same person.
class RatingMatrix {
 public:
  RatingMatrix(std::size_t n_items, std::size_t k, std::vector<double> values,
               std::vector<std::string> item_ids = {})
      : n_(n_items), k_(k), values_(std::move(values)), ids_(std::move(item_ids)) {
    if (n_ < 2 || k_ < 2)
      throw Error(ErrorCode::invalid_input, "rating matrix needs n >= 2 items and k >= 2 ratings per item",
                  {{"n", n_}, {"k", k_}});
    if (values_.size() != n_ * k_)
      throw Error(ErrorCode::invalid_input, "rating matrix is not rectangular");
    if (!ids_.empty() && ids_.size() != n_)
      throw Error(ErrorCode::invalid_input, "rating matrix: one id per item required");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "rating matrix: non-finite value");
  }

  /// Builds from ragged rows; every row must have the same length.
  static RatingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    std::size_t k = rows.empty() ? 0 : rows.front().size();
    std::vector<double> flat;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != k)
        throw Error(ErrorCode::invalid_input,
                    "unbalanced design: item " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                        " ratings, expected " + std::to_string(k));
      flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    }
    return RatingMatrix(rows.size(), k, std::move(flat));
  }

  std::size_t n() const { return n_; }
  std::size_t k() const { return k_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * k_, k_}; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * k_ + j]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& item_ids() const { return ids_; }

 private:
  std::size_t n_, k_;
  std::vector<double> values_;
  std::vector<std::string> ids_;
};

struct ICCResult {
  double msb = 0;
  double msw = 0;
  double icc1 = 0;
  double icck = 0;
  std::size_t n = 0;
  std::size_t k = 0;
};

inline void to_json(nlohmann::json& j, const ICCResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = {{"msb", r.msb}, {"msw", r.msw}, {"icc1", num(r.icc1)}, {"icck", num(r.icck)}, {"n", r.n}, {"k", r.k},
       {"model", "one-way random effects, absolute agreement"}};
}

/// One-way random-effects ICC from the between/within-item mean squares:
///   ICC(1) = (MSB - MSW) / (MSB + (k-1) MSW)
///   ICC(k) = (MSB - MSW) / MSB
/// Values are not clamped; negative estimates signal a degenerate study.
/// With MSB == 0 and MSW > 0, ICC(k) is -infinity.
inline ICCResult icc_oneway(const RatingMatrix& m) {
  const std::size_t n = m.n(), k = m.k();
  std::vector<double> means(n);
  double grand = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (double v : m.row(i)) s += v;
    means[i] = s / static_cast<double>(k);
    grand += means[i];
  }
  grand /= static_cast<double>(n);

  double ss_between = 0, ss_within = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = means[i] - grand;
    ss_between += d * d;
    for (double v : m.row(i)) ss_within += (v - means[i]) * (v - means[i]);
  }
  ICCResult r;
  r.n = n;
  r.k = k;
  r.msb = static_cast<double>(k) * ss_between / static_cast<double>(n - 1);
  r.msw = ss_within / static_cast<double>(n * (k - 1));
  if (r.msb == 0 && r.msw == 0)
    throw Error(ErrorCode::degenerate, "degenerate: zero total variance");
  const double kd = static_cast<double>(k);
  r.icc1 = (r.msb - r.msw) / (r.msb + (kd - 1) * r.msw);
  r.icck = r.msb == 0 ? -std::numeric_limits<double>::infinity() : (r.msb - r.msw) / r.msb;
  return r;
}

/// Reliability of a k-rating average given single-rating reliability.
inline double spearman_brown(double icc1, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::invalid_input, "spearman_brown: k must be >= 1");
  const double kd = static_cast<double>(k);
  const double denom = 1 + (kd - 1) * icc1;
  if (std::abs(denom) < 1e-15)
    throw Error(ErrorCode::degenerate, "spearman_brown: zero denominator", {{"icc1", icc1}, {"k", k}});
  return kd * icc1 / denom;
}

}  // namespace genscale::stats
