#pragma once

#include <string>
#include <vector>

#include <httplib.h>
// <resolv.h> defines _res, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif
#include <nlohmann/json.hpp>

#include "genscale/service/study.hpp"

namespace genscale::service {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict:
    case ErrorCode::study_full: return 409;
    case ErrorCode::expired: return 410;
    case ErrorCode::infeasible:
    case ErrorCode::degenerate: return 422;
    case ErrorCode::io_error: return 500;
  }
  return 500;
}

inline ErrorCode error_code_from_string(const std::string& s) {
  for (auto c : {ErrorCode::invalid_input, ErrorCode::infeasible, ErrorCode::not_found, ErrorCode::conflict,
                 ErrorCode::study_full, ErrorCode::expired, ErrorCode::degenerate, ErrorCode::io_error})
    if (to_string(c) == s) return c;
  return ErrorCode::io_error;
}

/// Parses a POST /ratings body: {rater_id, group_id, items: [{sentence_id, value}]}.
inline std::tuple<std::string, std::string, std::vector<RatingItem>> parse_submission(const std::string& body) {
  try {
    auto j = nlohmann::json::parse(body);
    std::vector<RatingItem> items;
    for (const auto& it : j.at("items")) items.push_back({it.at("sentence_id").get<std::string>(), it.at("value").get<double>()});
    return {j.at("rater_id").get<std::string>(), j.at("group_id").get<std::string>(), std::move(items)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed submission: ") + e.what());
  }
}

/// Registers the study endpoints on `server`:
///   POST /raters, GET /tasks/{rater_id}, POST /ratings, GET /status,
///   GET /export?format=csv|json
/// Errors are returned as {code, message, details}.
inline void mount_routes(httplib::Server& server, StudyService& study) {
  auto json_reply = [](httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [json_reply](auto handler) {
    return [handler, json_reply](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        json_reply(res, http_status(e.code()), e.to_json());
      } catch (const std::exception& e) {
        json_reply(res, 500, Error(ErrorCode::io_error, e.what()).to_json());
      }
    };
  };

  server.Post("/raters", guarded([&study, json_reply](const httplib::Request&, httplib::Response& res) {
    json_reply(res, 201, study.register_rater());
  }));
  server.Get(R"(/tasks/([^/]+))", guarded([&study, json_reply](const httplib::Request& req, httplib::Response& res) {
    json_reply(res, 200, study.get_task(req.matches[1].str()));
  }));
  server.Post("/ratings", guarded([&study, json_reply](const httplib::Request& req, httplib::Response& res) {
    auto [rater, group, items] = parse_submission(req.body);
    auto ack = study.submit_ratings(rater, group, items);
    json_reply(res, 200, {{"stored", ack.stored}, {"assignment_status", std::string(to_string(ack.assignment_status))}});
  }));
  server.Get("/status", guarded([&study, json_reply](const httplib::Request&, httplib::Response& res) {
    json_reply(res, 200, study.completion_status());
  }));
  server.Get("/export", guarded([&study](const httplib::Request& req, httplib::Response& res) {
    const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("csv");
    auto body = study.export_ratings(format);
    res.status = 200;
    res.set_content(body, format == "csv" ? "text/csv" : "application/json");
  }));
}

/// Client for a running study service; service errors are rethrown as Error.
class HttpStudyClient {
 public:
  HttpStudyClient(const std::string& host, int port) : client_(host, port) {
    client_.set_connection_timeout(5);
    client_.set_read_timeout(30);
  }

  nlohmann::json register_rater() { return call(client_.Post("/raters", "", "application/json")); }
  nlohmann::json get_task(const std::string& rater_id) { return call(client_.Get("/tasks/" + rater_id)); }
  nlohmann::json submit(const std::string& rater_id, const std::string& group_id,
                        const std::vector<RatingItem>& items) {
    nlohmann::json body = {{"rater_id", rater_id}, {"group_id", group_id}, {"items", nlohmann::json::array()}};
    for (const auto& i : items) body["items"].push_back({{"sentence_id", i.sentence_id}, {"value", i.value}});
    return call(client_.Post("/ratings", body.dump(), "application/json"));
  }
  nlohmann::json status() { return call(client_.Get("/status")); }
  std::string export_csv() { return raw(client_.Get("/export?format=csv")); }

 private:
  std::string raw(const httplib::Result& res) {
    if (!res) throw Error(ErrorCode::io_error, "HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status >= 400) {
      nlohmann::json err;
      try {
        err = nlohmann::json::parse(res->body);
      } catch (...) {
        throw Error(ErrorCode::io_error, "HTTP " + std::to_string(res->status));
      }
      throw Error(error_code_from_string(err.value("code", "")), err.value("message", ""),
                  err.value("details", nlohmann::json::object()));
    }
    return res->body;
  }
  nlohmann::json call(const httplib::Result& res) { return nlohmann::json::parse(raw(res)); }

  httplib::Client client_;
};

/// Same interface as HttpStudyClient, calling the service directly.
class InProcessStudyClient {
 public:
  explicit InProcessStudyClient(StudyService& study) : study_(study) {}
  nlohmann::json register_rater() { return study_.register_rater(); }
  nlohmann::json get_task(const std::string& rater_id) { return study_.get_task(rater_id); }
  nlohmann::json submit(const std::string& rater_id, const std::string& group_id,
                        const std::vector<RatingItem>& items) {
    auto ack = study_.submit_ratings(rater_id, group_id, items);
    return {{"stored", ack.stored}, {"assignment_status", std::string(to_string(ack.assignment_status))}};
  }
  nlohmann::json status() { return study_.completion_status(); }
  std::string export_csv() { return study_.export_ratings("csv"); }

 private:
  StudyService& study_;
};

}  // namespace genscale::service
