#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "clarify/agents.hpp"
#include "clarify/codec.hpp"
#include "clarify/config.hpp"
#include "clarify/knowledge_store.hpp"
#include "clarify/llm_backend.hpp"
#include "clarify/orchestrator.hpp"
#include "clarify/session.hpp"

namespace httplib {
class Server;
}

namespace clarify {

enum class ResponseKind { Answer, Clarification, AnswerWithNotice };

std::string_view to_string(ResponseKind k) noexcept;
ResponseKind parse_response_kind(std::string_view s);

/// Clarification implies a question; AnswerWithNotice implies an answer and a
/// question; Answer carries no question or options.
struct QueryResponse {
  ResponseKind kind = ResponseKind::Answer;
  std::string session_id;
  std::optional<std::string> answer_text;
  std::optional<std::string> question;
  std::vector<ClarificationOption> options;
  std::optional<ResolvedQuery> resolved_query;  // set on /v1/clarify
  std::string trace_id;

  bool operator==(const QueryResponse&) const = default;
};

void validate_response(const QueryResponse& r);
void to_json(Json& j, const QueryResponse& v);
void from_json(const Json& j, QueryResponse& v);

/// Placeholder answer text; answering itself is out of scope.
std::string stub_answer(std::string_view query_text, const std::optional<std::string>& assumption = std::nullopt);

int http_status_for(ErrorCode code) noexcept;
Json error_body(std::string_view code, std::string_view message, std::string_view trace_id);

struct HandlerResult {
  int status = 200;
  Json body;
};

struct ServiceOptions {
  SurfacePolicy surface_policy = SurfacePolicy::AskFirst;
  PromptOptions prompt;
  int max_tokens = 512;
  ExecutionMode execution = ExecutionMode::Parallel;
  std::chrono::seconds session_ttl{30 * 60};
  SessionManager::Clock clock;
  std::string cors_origin;
  std::filesystem::path snapshot_dir;
  bool debug_trace = false;
  std::ostream* log = nullptr;  // JSON-lines request log and stage traces
};

/// Request handlers for the HTTP API. Handlers are safe to call concurrently;
/// work on one session is serialized by the session manager.
class Service {
 public:
  Service(std::shared_ptr<StoreHandle> store, AgentRegistry registry, std::shared_ptr<LlmBackend> backend,
          ServiceOptions options);

  /// Loads the store, rules or HTTP client, agents, and saved sessions.
  static std::unique_ptr<Service> from_config(const ServiceConfig& config, std::ostream* log = nullptr);

  HandlerResult post_query(const std::string& body, const std::string& trace_id);
  HandlerResult post_clarify(const std::string& body, const std::string& trace_id);
  HandlerResult get_session(const std::string& session_id, const std::string& trace_id) const;
  HandlerResult get_health(const std::string& trace_id) const;

  /// Adds routes, CORS handling, and request logging to `server`.
  void bind(httplib::Server& server);

  std::string new_trace_id();
  SessionManager& sessions() noexcept { return sessions_; }
  const LlmBackend& backend() const noexcept { return *backend_; }
  void log_line(const Json& line) const;

 private:
  PipelineConfig pipeline_config(const std::string& trace_id) const;
  QueryResponse respond(Session& session, const Query& query, const std::string& trace_id, bool append_user_turn);
  void persist(const std::string& session_id) const;

  std::shared_ptr<StoreHandle> store_;
  AgentRegistry registry_;
  std::shared_ptr<LlmBackend> backend_;
  ServiceOptions options_;
  SessionManager sessions_;
  std::atomic<std::uint64_t> trace_counter_{0};
  std::uint64_t trace_salt_;
  mutable std::mutex log_mu_;
};

/// Builds the backend named by the settings.
std::shared_ptr<LlmBackend> make_backend(const BackendSettings& settings);

/// Binds, listens, and blocks until `stop` is called from another thread.
/// `on_ready` runs once the socket is bound and receives the actual port.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 chooses a free port. Returns after `stop`; in-flight requests finish first.
  void listen(const std::string& host, int port, const std::function<void(int)>& on_ready = {});
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> listening_{false};
};

}  // namespace clarify
