#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "genscale/error.hpp"

namespace genscale {

/// Expert binary genericity label of a target noun.
enum class Label { generic, non_generic };

/// The two continuous rating scales. Each rater works on exactly one.
enum class Dimension { inclusiveness, abstractness };

inline constexpr std::array<Dimension, 2> kDimensions{Dimension::inclusiveness,
                                                      Dimension::abstractness};

constexpr std::string_view to_string(Label label) {
  return label == Label::generic ? "GENERIC" : "NON-GENERIC";
}

constexpr std::string_view to_string(Dimension dim) {
  return dim == Dimension::inclusiveness ? "INCLUSIVENESS" : "ABSTRACTNESS";
}

/// Short column/file tag: "inc" or "abs".
constexpr std::string_view short_name(Dimension dim) {
  return dim == Dimension::inclusiveness ? "inc" : "abs";
}

inline std::optional<Label> parse_label(std::string_view text) {
  if (text == "GENERIC") return Label::generic;
  if (text == "NON-GENERIC" || text == "NON_GENERIC") return Label::non_generic;
  return std::nullopt;
}

inline std::optional<Dimension> parse_dimension(std::string_view text) {
  if (text == "INCLUSIVENESS" || text == "inc" || text == "INC")
    return Dimension::inclusiveness;
  if (text == "ABSTRACTNESS" || text == "abs" || text == "ABS")
    return Dimension::abstractness;
  return std::nullopt;
}

}  // namespace genscale
