#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "genscale/stats/aggregate.hpp"
#include "genscale/util/format.hpp"

namespace genscale::report {

enum class Split { gold_label, concreteness_class, both };

constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::gold_label: return "gold";
    case Split::concreteness_class: return "concreteness";
    case Split::both: return "both";
  }
  return "";
}

struct HistogramOptions {
  Dimension dimension = Dimension::inclusiveness;
  Split split = Split::gold_label;
  int n_bins = 20;
};

struct ItemMeta {
  Label gold = Label::generic;
  bool concrete = true;
};

/// Counts per bin for each subgroup; bins are [i/n, (i+1)/n), the last one
/// closed at 1.
struct Histogram {
  HistogramOptions options;
  std::map<std::string, std::vector<std::size_t>> counts;

  double bin_start(int i) const { return static_cast<double>(i) / options.n_bins; }
  double bin_end(int i) const { return static_cast<double>(i + 1) / options.n_bins; }
  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& [name, c] : counts)
      for (auto v : c) t += v;
    return t;
  }
};

inline int bin_index(double value, int n_bins) {
  return std::clamp(static_cast<int>(std::floor(value * n_bins)), 0, n_bins - 1);
}

inline std::vector<std::string> subgroup_names(Split split) {
  switch (split) {
    case Split::gold_label: return {"GENERIC", "NON-GENERIC"};
    case Split::concreteness_class: return {"abstract", "concrete"};
    case Split::both: return {"GENERIC/abstract", "GENERIC/concrete", "NON-GENERIC/abstract", "NON-GENERIC/concrete"};
  }
  return {};
}

inline std::string subgroup_of(const ItemMeta& m, Split split) {
  const std::string gold(to_string(m.gold));
  const std::string cls = m.concrete ? "concrete" : "abstract";
  switch (split) {
    case Split::gold_label: return gold;
    case Split::concreteness_class: return cls;
    case Split::both: return gold + "/" + cls;
  }
  return {};
}

inline Histogram histogram_data(const std::vector<stats::AggregatedItem>& items,
                                const std::map<std::string, ItemMeta>& meta, const HistogramOptions& options) {
  if (options.n_bins < 2) throw Error(ErrorCode::invalid_input, "histogram: n_bins must be >= 2");
  Histogram h{options, {}};
  for (const auto& name : subgroup_names(options.split)) h.counts[name].assign(static_cast<std::size_t>(options.n_bins), 0);
  for (const auto& item : items) {
    auto it = meta.find(item.sentence_id);
    if (it == meta.end())
      throw Error(ErrorCode::not_found, "histogram: no metadata for sentence '" + item.sentence_id + "'",
                  {{"sentence_id", item.sentence_id}});
    auto v = item.mean(options.dimension);
    if (!v)
      throw Error(ErrorCode::invalid_input, "histogram: sentence '" + item.sentence_id + "' has no " +
                                                std::string(to_string(options.dimension)) + " mean");
    ++h.counts[subgroup_of(it->second, options.split)][static_cast<std::size_t>(bin_index(*v, options.n_bins))];
  }
  return h;
}

/// Long-format CSV: bin_start, bin_end, subgroup, count, density. Density is
/// count / (subgroup total * bin width).
inline std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_start,bin_end,subgroup,count,density\n";
  const double width = 1.0 / h.options.n_bins;
  for (const auto& [name, counts] : h.counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    for (int i = 0; i < h.options.n_bins; ++i) {
      const auto c = counts[static_cast<std::size_t>(i)];
      const double density = total ? static_cast<double>(c) / (static_cast<double>(total) * width) : 0.0;
      out += util::fixed(h.bin_start(i), 4) + ',' + util::fixed(h.bin_end(i), 4) + ',' + name + ',' +
             std::to_string(c) + ',' + util::fixed(density, 6) + '\n';
    }
  }
  return out;
}

/// Static SVG: one translucent bar series per subgroup over a shared [0,1] axis.
inline std::string histogram_svg(const Histogram& h, const std::string& title) {
  constexpr int W = 640, H = 360, left = 50, right = 20, top = 40, bottom = 50;
  static const char* palette[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a"};
  std::size_t peak = 1;
  for (const auto& [name, c] : h.counts)
    for (auto v : c) peak = std::max(peak, v);
  const double plot_w = W - left - right, plot_h = H - top - bottom;
  const double bar_w = plot_w / h.options.n_bins;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) + "\" height=\"" +
                  std::to_string(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"20\" text-anchor=\"middle\">" + title + "</text>\n";
  std::size_t series = 0;
  for (const auto& [name, counts] : h.counts) {
    const char* color = palette[series % 4];
    for (int i = 0; i < h.options.n_bins; ++i) {
      const auto c = counts[static_cast<std::size_t>(i)];
      if (!c) continue;
      const double bh = plot_h * static_cast<double>(c) / static_cast<double>(peak);
      s += "<rect x=\"" + util::fixed(left + i * bar_w, 2) + "\" y=\"" + util::fixed(top + plot_h - bh, 2) +
           "\" width=\"" + util::fixed(bar_w - 1, 2) + "\" height=\"" + util::fixed(bh, 2) + "\" fill=\"" + color +
           "\" fill-opacity=\"0.5\"/>\n";
    }
    s += "<rect x=\"" + std::to_string(W - right - 150) + "\" y=\"" + std::to_string(top + 16 * static_cast<int>(series)) +
         "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/><text x=\"" + std::to_string(W - right - 135) +
         "\" y=\"" + std::to_string(top + 9 + 16 * static_cast<int>(series)) + "\">" + name + "</text>\n";
    ++series;
  }
  s += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top + static_cast<int>(plot_h)) + "\" x2=\"" +
       std::to_string(W - right) + "\" y2=\"" + std::to_string(top + static_cast<int>(plot_h)) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = left + plot_w * t / 4.0;
    s += "<text x=\"" + util::fixed(x, 2) + "\" y=\"" + std::to_string(H - bottom + 18) + "\" text-anchor=\"middle\">" +
         util::fixed(t / 4.0, 2) + "</text>\n";
  }
  s += "<text x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top - 6) + "\">max count " +
       std::to_string(peak) + "</text>\n</svg>\n";
  return s;
}

}  // namespace genscale::report
