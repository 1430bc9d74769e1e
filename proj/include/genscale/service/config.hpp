#pragma once

#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genscale/types.hpp"
#include "genscale/util/delimited.hpp"
#include "genscale/util/format.hpp"
#include "genscale/util/hash.hpp"

namespace genscale::service {

/// Slider endpoint labels shown to raters. "{noun}" is replaced by the
/// group's lemma on the client.
struct Anchors {
  std::string left;
  std::string right;
  std::vector<std::string> ticks;
};

inline Anchors default_anchors(Dimension dim) {
  if (dim == Dimension::inclusiveness)
    return {"one particular {noun}", "all {noun}", {"some {noun}", "most {noun}"}};
  return {"can be experienced through the senses (seen, heard, touched, smelled, tasted)",
          "cannot be experienced through the senses", {}};
}

struct StudyConfig {
  int k = 30;  // raters per item per dimension
  std::vector<int> batch_sizes{6, 8, 10};
  int timeout_minutes = 60;  // inactive assignments revert after this; 0 disables
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::string log_path;  // empty: in-memory only
  bool fsync = true;
  Anchors inclusiveness_anchors = default_anchors(Dimension::inclusiveness);
  Anchors abstractness_anchors = default_anchors(Dimension::abstractness);

  const Anchors& anchors(Dimension d) const {
    return d == Dimension::inclusiveness ? inclusiveness_anchors : abstractness_anchors;
  }

  void validate() const {
    if (k < 1) throw Error(ErrorCode::invalid_input, "study config: k must be >= 1");
    if (batch_sizes.empty()) throw Error(ErrorCode::invalid_input, "study config: batch_sizes is empty");
    for (int s : batch_sizes)
      if (s < 1) throw Error(ErrorCode::invalid_input, "study config: batch sizes must be positive");
    if (timeout_minutes < 0) throw Error(ErrorCode::invalid_input, "study config: timeout_minutes must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const Anchors& a) {
  j = {{"left", a.left}, {"right", a.right}, {"ticks", a.ticks}};
}

inline void from_json(const nlohmann::json& j, Anchors& a) {
  a.left = j.value("left", a.left);
  a.right = j.value("right", a.right);
  a.ticks = j.value("ticks", a.ticks);
}

inline void to_json(nlohmann::json& j, const StudyConfig& c) {
  j = {{"k", c.k},
       {"batch_sizes", c.batch_sizes},
       {"timeout_minutes", c.timeout_minutes},
       {"bind_address", c.bind_address},
       {"port", c.port},
       {"log_path", c.log_path},
       {"fsync", c.fsync},
       {"anchors", {{"inclusiveness", c.inclusiveness_anchors}, {"abstractness", c.abstractness_anchors}}}};
}

inline void from_json(const nlohmann::json& j, StudyConfig& c) {
  c.k = j.value("k", c.k);
  c.batch_sizes = j.value("batch_sizes", c.batch_sizes);
  c.timeout_minutes = j.value("timeout_minutes", c.timeout_minutes);
  c.bind_address = j.value("bind_address", c.bind_address);
  c.port = j.value("port", c.port);
  c.log_path = j.value("log_path", c.log_path);
  c.fsync = j.value("fsync", c.fsync);
  if (j.contains("anchors")) {
    const auto& a = j["anchors"];
    if (a.contains("inclusiveness")) a["inclusiveness"].get_to(c.inclusiveness_anchors);
    if (a.contains("abstractness")) a["abstractness"].get_to(c.abstractness_anchors);
  }
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v ? std::optional<std::string>(v) : std::nullopt;
}

/// GENSCALE_K, GENSCALE_BATCH_SIZES (comma list), GENSCALE_TIMEOUT_MINUTES,
/// GENSCALE_BIND_ADDRESS, GENSCALE_PORT, GENSCALE_LOG_PATH.
inline void apply_env_overrides(StudyConfig& c, const EnvLookup& env = process_env) {
  auto int_var = [&](const std::string& name, int& target) {
    if (auto v = env(name)) {
      auto parsed = util::parse_int<int>(*v);
      if (!parsed) throw Error(ErrorCode::invalid_input, name + " is not an integer");
      target = *parsed;
    }
  };
  int_var("GENSCALE_K", c.k);
  int_var("GENSCALE_TIMEOUT_MINUTES", c.timeout_minutes);
  int_var("GENSCALE_PORT", c.port);
  if (auto v = env("GENSCALE_BATCH_SIZES")) {
    c.batch_sizes.clear();
    for (const auto& f : util::split_record(*v, ',')) {
      auto parsed = util::parse_int<int>(f);
      if (!parsed) throw Error(ErrorCode::invalid_input, "GENSCALE_BATCH_SIZES must be a comma list of integers");
      c.batch_sizes.push_back(*parsed);
    }
  }
  if (auto v = env("GENSCALE_BIND_ADDRESS")) c.bind_address = *v;
  if (auto v = env("GENSCALE_LOG_PATH")) c.log_path = *v;
}

/// Reads a JSON config file (if a path is given), then applies environment
/// overrides, then validates.
inline StudyConfig load_study_config(const std::string& path, const EnvLookup& env = process_env) {
  StudyConfig c;
  if (!path.empty()) {
    try {
      auto doc = nlohmann::json::parse(util::read_file(path));
      c = doc.contains("study") ? doc["study"].get<StudyConfig>() : doc.get<StudyConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::invalid_input, "study config " + path + ": " + e.what());
    }
  }
  apply_env_overrides(c, env);
  c.validate();
  return c;
}

}  // namespace genscale::service
