#include <httplib.h>

#include <chrono>
#include <thread>

#include "clarify/service.hpp"

namespace clarify {

namespace {

constexpr const char* kJson = "application/json";

}  // namespace

void Service::bind(httplib::Server& server) {
  // Wraps a handler with trace ids, JSON output, and a request log line.
  auto route = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      const auto start = std::chrono::steady_clock::now();
      const auto trace_id = new_trace_id();
      HandlerResult out = handler(req, trace_id);
      res.status = out.status;
      res.set_header("X-Trace-Id", trace_id);
      res.set_content(out.body.dump(), kJson);
      log_line(Json{{"method", req.method},
                    {"path", req.path},
                    {"status", out.status},
                    {"elapsed_ms", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                                       .count()},
                    {"trace_id", trace_id}});
    };
  };

  if (!options_.cors_origin.empty()) {
    server.set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  }
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/v1/query", route([this](const httplib::Request& req, const std::string& trace_id) {
                return post_query(req.body, trace_id);
              }));
  server.Post("/v1/clarify", route([this](const httplib::Request& req, const std::string& trace_id) {
                return post_clarify(req.body, trace_id);
              }));
  server.Get(R"(/v1/session/([^/]+))", route([this](const httplib::Request& req, const std::string& trace_id) {
               return get_session(req.matches[1].str(), trace_id);
             }));
  server.Get("/v1/health", route([this](const httplib::Request&, const std::string& trace_id) {
               return get_health(trace_id);
             }));

  // Unrouted paths and httplib-level failures get the JSON error shape.
  server.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const auto trace_id = new_trace_id();
    const auto code = res.status == 404 ? "NotFound" : "HttpError";
    res.set_content(error_body(code, "no route for " + req.method + " " + req.path, trace_id).dump(), kJson);
    log_line(Json{{"method", req.method}, {"path", req.path}, {"status", res.status}, {"elapsed_ms", 0.0},
                  {"trace_id", trace_id}});
    return httplib::Server::HandlerResponse::Handled;
  });
}

HttpServer::HttpServer(Service& service) : server_(std::make_unique<httplib::Server>()) { service.bind(*server_); }

HttpServer::~HttpServer() { stop(); }

void HttpServer::listen(const std::string& host, int port, const std::function<void(int)>& on_ready) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    if (bound < 0) fail(ErrorCode::ConfigError, "cannot bind " + host);
  } else if (!server_->bind_to_port(host, port)) {
    fail(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
  }
  if (on_ready) on_ready(bound);
  if (stop_requested_) return;
  listening_ = true;
  server_->listen_after_bind();
  listening_ = false;
}

void HttpServer::stop() {
  stop_requested_ = true;
  // A stop that races the start of listen_after_bind waits for it to run.
  for (int i = 0; i < 2000 && listening_ && !server_->is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  server_->stop();
}

}  // namespace clarify
