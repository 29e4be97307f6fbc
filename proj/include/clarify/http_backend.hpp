#pragma once

#include <chrono>
#include <string>

#include "clarify/eval.hpp"
#include "clarify/llm_backend.hpp"

namespace clarify {

/// "scheme://host[:port]" and the request path of a URL.
struct UrlParts {
  std::string origin;
  std::string path;  // starts with '/'
};

/// Throws ConfigError for anything but http(s)://host[:port][/path], and for
/// https when TLS support was not compiled in.
UrlParts split_url(const std::string& url);

struct HttpBackendConfig {
  std::string url;  // full endpoint, e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key_env = "CLARIFY_LLM_API_KEY";  // sent as a Bearer token when set
  std::chrono::milliseconds timeout{30000};
};

/// Chat-completion client. Request body:
///   {"model", "messages": [{"role": "user", "content": prompt}], "max_tokens", "temperature"}
/// Reply text is read from choices[0].message.content.
/// Connection failures and non-2xx statuses are BackendUnavailable, timeouts
/// are BackendTimeout, and unexpected bodies are MalformedResponse.
class HttpBackend final : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string_view kind() const noexcept override { return "http"; }
  const HttpBackendConfig& config() const noexcept { return config_; }

 private:
  std::string do_complete(const CompletionRequest& req) override;

  HttpBackendConfig config_;
  UrlParts url_;
};

/// External vector service: POST {"tokens": [...]} returning
/// {"vectors": [[...], ...]} with one vector per token.
class HttpEmbedder final : public eval::Embedder {
 public:
  explicit HttpEmbedder(std::string url, std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  std::vector<eval::Vector> embed(const std::vector<std::string>& tokens) const override;
  std::string name() const override { return "http:" + url_; }

 private:
  std::string url_;
  UrlParts parts_;
  std::chrono::milliseconds timeout_;
};

}  // namespace clarify
