#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace genscale {

enum class ErrorCode {
  invalid_input,    // malformed file, row, field or argument
  infeasible,       // constraints cannot be satisfied
  not_found,        // unknown rater, group, sentence, file
  conflict,         // duplicate submission, already submitted
  study_full,       // no open (batch, dimension) slot
  expired,          // assignment abandoned after timeout
  degenerate,       // statistic undefined for the input
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::study_full: return "study_full";
    case ErrorCode::expired: return "expired";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

/// Library-wide exception. `details` carries structured context (missing ids,
/// measured values) that the HTTP layer forwards verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const {
    return {{"code", std::string(to_string(code_))},
            {"message", what()},
            {"details", details_}};
  }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace genscale
