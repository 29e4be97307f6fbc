#include "clarify/http_backend.hpp"

#include <httplib.h>

#include <cstdlib>

#include "clarify/codec.hpp"

namespace clarify {

namespace {

std::unique_ptr<httplib::Client> make_client(const UrlParts& url, std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(url.origin);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

ErrorCode transport_error_code(httplib::Error e) {
  switch (e) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
      return ErrorCode::BackendTimeout;
    default:
      return ErrorCode::BackendUnavailable;
  }
}

// POSTs JSON and returns the parsed reply. `unavailable` is the code used for
// transport and status failures.
Json post_json(const UrlParts& url, std::chrono::milliseconds timeout, const httplib::Headers& headers,
               const Json& body, ErrorCode unavailable, ErrorCode malformed) {
  auto client = make_client(url, timeout);
  auto res = client->Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto code = unavailable == ErrorCode::BackendUnavailable ? transport_error_code(res.error()) : unavailable;
    fail(code, url.origin + url.path + ": " + httplib::to_string(res.error()));
  }
  if ((res->status == 408 || res->status == 504) && unavailable == ErrorCode::BackendUnavailable) {
    fail(ErrorCode::BackendTimeout, url.origin + url.path + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(unavailable, url.origin + url.path + ": HTTP " + std::to_string(res->status));
  }
  if (!Json::accept(res->body)) fail(malformed, url.origin + url.path + ": reply is not JSON");
  return Json::parse(res->body);
}

}  // namespace

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::ConfigError, "URL needs a scheme: '" + url + "'");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    fail(ErrorCode::ConfigError, "unsupported URL scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") fail(ErrorCode::ConfigError, "https URLs need a build with OpenSSL");
#endif
  const auto host_start = scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  UrlParts parts;
  parts.origin = url.substr(0, path_start);
  parts.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (parts.origin.size() <= host_start) fail(ErrorCode::ConfigError, "URL has no host: '" + url + "'");
  return parts;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)), url_(split_url(config_.url)) {
  if (config_.model.empty()) fail(ErrorCode::ConfigError, "http backend needs a model name");
  if (config_.timeout.count() <= 0) fail(ErrorCode::ConfigError, "http backend timeout must be positive");
}

std::string HttpBackend::do_complete(const CompletionRequest& req) {
  validate_request(req);
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const Json body{{"model", config_.model},
                  {"messages", Json::array({Json{{"role", "user"}, {"content", req.prompt}}})},
                  {"max_tokens", req.max_tokens},
                  {"temperature", req.temperature}};
  const auto reply =
      post_json(url_, config_.timeout, headers, body, ErrorCode::BackendUnavailable, ErrorCode::MalformedResponse);
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) fail(ErrorCode::MalformedResponse, "choices[0].message.content is not a string");
    return content.get<std::string>();
  } catch (const Json::exception&) {
    fail(ErrorCode::MalformedResponse, "reply has no choices[0].message.content");
  }
}

HttpEmbedder::HttpEmbedder(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), parts_(split_url(url_)), timeout_(timeout) {}

std::vector<eval::Vector> HttpEmbedder::embed(const std::vector<std::string>& tokens) const {
  const auto reply = post_json(parts_, timeout_, {}, Json{{"tokens", tokens}}, ErrorCode::EmbedderUnavailable,
                               ErrorCode::EmbedderUnavailable);
  std::vector<eval::Vector> out;
  try {
    out = reply.at("vectors").get<std::vector<eval::Vector>>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::EmbedderUnavailable, std::string("vector service reply: ") + e.what());
  }
  if (out.size() != tokens.size()) {
    fail(ErrorCode::EmbedderUnavailable, "vector service returned " + std::to_string(out.size()) + " vectors for " +
                                             std::to_string(tokens.size()) + " tokens");
  }
  return out;
}

}  // namespace clarify
