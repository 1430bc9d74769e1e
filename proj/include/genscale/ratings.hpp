#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "genscale/types.hpp"
#include "genscale/util/delimited.hpp"
#include "genscale/util/format.hpp"
#include "genscale/util/time.hpp"

namespace genscale {

/// One rater's slider value for one sentence on one dimension.
struct RatingRecord {
  std::string rater_id;
  std::string sentence_id;
  std::string lemma;
  Dimension dimension = Dimension::inclusiveness;
  double value = 0;
  util::Timestamp submitted_at{};

  bool operator==(const RatingRecord&) const = default;
};

/// Stored precision of slider values.
inline constexpr int kValueDecimals = 4;

inline constexpr std::string_view kExportHeader = "rater_id,sentence_id,lemma,dimension,value,submitted_at";

inline void sort_for_export(std::vector<RatingRecord>& records) {
  std::sort(records.begin(), records.end(), [](const RatingRecord& a, const RatingRecord& b) {
    return std::tie(a.sentence_id, a.dimension, a.rater_id) < std::tie(b.sentence_id, b.dimension, b.rater_id);
  });
}

/// Export CSV, sorted by (sentence_id, dimension, rater_id).
inline std::string format_ratings_csv(std::vector<RatingRecord> records) {
  sort_for_export(records);
  std::string out(kExportHeader);
  out += '\n';
  for (const auto& r : records) {
    out += util::quote_field(r.rater_id) + ',' + util::quote_field(r.sentence_id) + ',' +
           util::quote_field(r.lemma) + ',' + std::string(to_string(r.dimension)) + ',' +
           util::fixed(r.value, kValueDecimals) + ',' + util::to_iso8601(r.submitted_at) + '\n';
  }
  return out;
}

inline std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
  auto lines = util::split_lines(text);
  if (lines.empty() || lines.front() != kExportHeader)
    throw Error(ErrorCode::invalid_input, "ratings CSV: header must be " + std::string(kExportHeader));
  std::vector<RatingRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = util::split_record(lines[i], ',');
    auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::invalid_input, "ratings CSV: " + what + ", line " + std::to_string(i + 1),
                  {{"line", i + 1}});
    };
    if (f.size() != 6) fail("expected 6 columns");
    RatingRecord r;
    r.rater_id = f[0];
    r.sentence_id = f[1];
    r.lemma = f[2];
    auto dim = parse_dimension(f[3]);
    if (!dim) fail("unknown dimension '" + f[3] + "'");
    r.dimension = *dim;
    auto value = util::parse_double(f[4]);
    if (!value || *value < 0.0 || *value > 1.0) fail("value out of [0,1]");
    r.value = *value;
    auto ts = util::parse_iso8601(f[5]);
    if (!ts) fail("bad timestamp");
    r.submitted_at = *ts;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace genscale
