#include "socratic/server.hpp"

#include <httplib.h>

#include <charconv>
#include <iostream>

namespace socratic {
namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

nlohmann::json parse_body(const httplib::Request& req) {
  auto doc = nlohmann::json::parse(req.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::invalid_argument, "request body must be a JSON object");
  }
  return doc;
}

std::string string_field(const nlohmann::json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_string()) {
    throw Error(ErrorCode::invalid_argument, std::string("missing string field '") + name + "'");
  }
  return it->get<std::string>();
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::empty_content:
    case ErrorCode::invalid_argument:
    case ErrorCode::parse_error:
      return 400;
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::busy:
    case ErrorCode::session_closed:
    case ErrorCode::alternation_violation:
      return 409;
    case ErrorCode::unknown_exercise:
      return 422;
    case ErrorCode::backend_unavailable:
    case ErrorCode::mock_exhausted:
    case ErrorCode::mock_mismatch:
      return 503;
    default:
      return 500;
  }
}

struct ApiServer::Impl {
  Impl(TutorService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  TutorService& service;
  ServerOptions options;
  httplib::Server http;

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, http_status_for(e.code()), to_string(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal_error", e.what());
      }
    };
  }

  void routes() {
    if (!options.cors_origin.empty()) {
      http.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
      http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    http.Get("/api/exercises", guarded([this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& ex : service.exercises()) {
        out.push_back({{"exercise_id", ex.exercise_id}, {"title", ex.title}});
      }
      send_json(res, 200, out);
    }));

    http.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      auto session = service.create_session(string_field(body, "exercise_id"),
                                            string_field(body, "student_id"));
      send_json(res, 201, session);
    }));

    http.Get(R"(/api/sessions/([^/]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, service.get_session(req.matches[1].str()));
             }));

    http.Post(R"(/api/sessions/([^/]+)/messages)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                auto content = string_field(body, "content");
                auto result = service.post_message(req.matches[1].str(), content,
                                                   TutorService::WhenBusy::reject);
                if (result.backend_error) {
                  send_error(res, 503, "backend_unavailable", result.tutor_message.content);
                  return;
                }
                send_json(res, 200,
                          {{"tutor_message", result.tutor_message},
                           {"outcome", result.outcome},
                           {"trace_sequence", result.trace_sequence}});
              }));

    http.Get(R"(/api/sessions/([^/]+)/traces/(\d+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               std::uint64_t seq = 0;
               auto s = req.matches[2].str();
               auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seq);
               if (ec != std::errc() || ptr != s.data() + s.size()) {
                 throw Error(ErrorCode::not_found, "no trace '" + s + "'");
               }
               send_json(res, 200, service.get_trace(req.matches[1].str(), seq));
             }));

    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                   "no such endpoint or method");
      }
    });
  }
};

ApiServer::ApiServer(TutorService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::io_error, "cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) {
    throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::serve() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

bool ApiServer::is_running() const { return impl_->http.is_running(); }

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace socratic
