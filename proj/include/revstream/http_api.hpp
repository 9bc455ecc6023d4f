#pragma once

// HTTP/JSON API over a Service, and an HTTP client for external descriptions.

#include <cstdlib>
#include <memory>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "revstream/explain.hpp"
#include "revstream/ingest.hpp"
#include "revstream/service.hpp"

namespace revstream::service {

/// Posts {"prompt", "temperature"} to `url` and reads {"text"} back. Plain HTTP only.
class HttpGenerator : public explain::DescriptionGenerator {
 public:
  HttpGenerator(std::string url, std::string api_key, int timeout_seconds = 10)
      : api_key_(std::move(api_key)), timeout_(timeout_seconds) {
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto path_start = url.find('/', host_start);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  }

  std::string generate(const std::string& prompt) override {
    httplib::Client cli(base_);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    nlohmann::json body{{"prompt", prompt}, {"temperature", explain::kTemperature}};
    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw std::runtime_error("description request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw std::runtime_error("description service returned " + std::to_string(res->status));
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  }

 private:
  std::string base_, path_, api_key_;
  int timeout_;
};

struct ApiConfig {
  std::string admin_token;  // required as "Bearer <token>" on POST routes when set
  explain::DescriptionGenerator* generator = nullptr;
};

inline std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

/// REVSTREAM_DESCRIBE_URL / REVSTREAM_DESCRIBE_KEY; null when no URL is set.
inline std::unique_ptr<HttpGenerator> generator_from_env() {
  auto url = env_or("REVSTREAM_DESCRIBE_URL");
  if (url.empty()) return nullptr;
  return std::make_unique<HttpGenerator>(url, env_or("REVSTREAM_DESCRIBE_KEY"));
}

namespace detail {

inline void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void error(httplib::Response& res, int status, const std::string& msg) {
  reply(res, status, {{"error", msg}});
}

inline std::optional<std::int64_t> time_param(const httplib::Request& req, const char* name,
                                              bool& bad) {
  if (!req.has_param(name) || req.get_param_value(name).empty()) return std::nullopt;
  auto v = ingest::parse_timestamp(req.get_param_value(name));
  if (!v) bad = true;
  return v;
}

inline std::optional<std::size_t> size_param(const httplib::Request& req, const char* name,
                                             std::size_t fallback, bool& bad) {
  if (!req.has_param(name)) return fallback;
  const auto s = req.get_param_value(name);
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    bad = true;
    return std::nullopt;
  }
  return v;
}

}  // namespace detail

/// Routes:
///   GET  /health
///   GET  /reviews?query=&from=&to=&page=&page_size=
///   GET  /reviews/{id}
///   GET  /reviews/{id}/explanation
///   POST /reviews/{id}/feedback   {"correct": bool, "moderator_id"?: string}
///   GET  /trees?index=
///   GET  /alerts
///   POST /alerts/{id}/ack
///   GET  /metrics
///   GET  /export
inline void register_routes(httplib::Server& srv, Service& svc, ApiConfig api = {}) {
  using detail::error;
  using detail::reply;
  auto authorized = [api](const httplib::Request& req, httplib::Response& res) {
    if (api.admin_token.empty()) return true;
    if (req.get_header_value("Authorization") == "Bearer " + api.admin_token) return true;
    error(res, 401, "missing or wrong admin token");
    return false;
  };

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"status", "ok"}});
  });

  srv.Get("/reviews", [&svc](const httplib::Request& req, httplib::Response& res) {
    bool bad = false;
    SearchQuery q;
    q.text = req.get_param_value("query");
    q.from = detail::time_param(req, "from", bad);
    q.to = detail::time_param(req, "to", bad);
    auto page = detail::size_param(req, "page", 1, bad);
    auto size = detail::size_param(req, "page_size", 20, bad);
    if (bad || *page == 0) return error(res, 400, "bad query parameter");
    q.page = *page;
    q.page_size = *size;
    reply(res, 200, svc.search(q));
  });

  srv.Get(R"(/reviews/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    auto r = svc.record(req.matches[1]);
    if (!r) return error(res, 404, "unknown review");
    reply(res, 200, *r);
  });

  srv.Get(R"(/reviews/([^/]+)/explanation)",
          [&svc, api](const httplib::Request& req, httplib::Response& res) {
            auto p = svc.explanation(req.matches[1], api.generator);
            if (!p) return error(res, 404, "unknown review");
            reply(res, 200, *p);
          });

  srv.Post(R"(/reviews/([^/]+)/feedback)",
           [&svc, authorized](const httplib::Request& req, httplib::Response& res) {
             if (!authorized(req, res)) return;
             auto body = nlohmann::json::parse(req.body, nullptr, false);
             if (body.is_discarded() || !body.is_object() || !body.contains("correct") ||
                 !body["correct"].is_boolean())
               return error(res, 400, "body must be {\"correct\": bool}");
             std::string moderator;
             if (body.contains("moderator_id") && body["moderator_id"].is_string())
               moderator = body["moderator_id"].get<std::string>();
             if (!svc.record(req.matches[1])) return error(res, 404, "unknown review");
             switch (svc.apply_feedback(req.matches[1], body["correct"].get<bool>(), moderator)) {
               case Outcome::ok: return reply(res, 200, *svc.record(req.matches[1]));
               case Outcome::not_found: return error(res, 404, "unknown review");
               case Outcome::conflict: return error(res, 409, "feedback already recorded");
             }
           });

  srv.Get("/trees", [&svc](const httplib::Request& req, httplib::Response& res) {
    bool bad = false;
    auto index = detail::size_param(req, "index", 0, bad);
    if (bad) return error(res, 400, "bad index");
    auto trees = svc.trees();
    const auto& list = trees->at("trees");
    if (*index >= list.size()) return error(res, 404, "tree index out of range");
    reply(res, 200,
          {{"index", *index}, {"count", list.size()}, {"kind", trees->at("kind")}, {"tree", list.at(*index)}});
  });

  srv.Get("/alerts", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, svc.alerts_json());
  });

  srv.Post(R"(/alerts/(\d+)/ack)", [&svc, authorized](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    std::size_t id = 0;
    const std::string s = req.matches[1];
    std::from_chars(s.data(), s.data() + s.size(), id);
    switch (svc.acknowledge(id)) {
      case Outcome::ok: return reply(res, 200, {{"id", id}, {"acknowledged", true}});
      case Outcome::not_found: return error(res, 404, "unknown alert");
      case Outcome::conflict: return error(res, 409, "alert already acknowledged");
    }
  });

  srv.Get("/metrics", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, svc.metrics_json());
  });

  srv.Get("/export", [&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, svc.export_json());
    res.set_header("Content-Disposition", "attachment; filename=\"revstream-export.json\"");
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      error(res, 500, e.what());
    } catch (...) {
      error(res, 500, "internal error");
    }
  });
}

}  // namespace revstream::service
