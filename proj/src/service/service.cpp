#include "clarify/service.hpp"

#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <random>

#include "clarify/http_backend.hpp"

namespace clarify {

namespace {

std::string required_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

Json parse_body(const std::string& body) {
  if (!Json::accept(body)) fail(ErrorCode::ParseError, "request body is not valid JSON");
  auto j = Json::parse(body);
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
  return j;
}

std::string session_id_of(const Json& j) {
  auto id = required_string(j, "session_id");
  if (!valid_session_id(id)) {
    fail(ErrorCode::InvalidArgument, "session_id must be 1-128 characters from [A-Za-z0-9._-]");
  }
  return id;
}

template <typename Fn>
HandlerResult guarded(const std::string& trace_id, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return {http_status_for(e.code()), error_body(to_string(e.code()), e.what(), trace_id)};
  } catch (const Json::exception& e) {
    return {400, error_body(to_string(ErrorCode::ParseError), e.what(), trace_id)};
  } catch (const std::exception& e) {
    return {500, error_body("Internal", e.what(), trace_id)};
  }
}

}  // namespace

std::string_view to_string(ResponseKind k) noexcept {
  switch (k) {
    case ResponseKind::Answer: return "answer";
    case ResponseKind::Clarification: return "clarification";
    case ResponseKind::AnswerWithNotice: return "answer_with_notice";
  }
  return "answer";
}

ResponseKind parse_response_kind(std::string_view s) {
  if (s == "answer") return ResponseKind::Answer;
  if (s == "clarification") return ResponseKind::Clarification;
  if (s == "answer_with_notice") return ResponseKind::AnswerWithNotice;
  fail(ErrorCode::ParseError, "unknown response kind '" + std::string(s) + "'");
}

void validate_response(const QueryResponse& r) {
  switch (r.kind) {
    case ResponseKind::Answer:
      if (!r.answer_text || r.question || !r.options.empty()) {
        fail(ErrorCode::InvalidArgument, "answer responses carry answer_text only");
      }
      break;
    case ResponseKind::Clarification:
      if (!r.question || r.answer_text) fail(ErrorCode::InvalidArgument, "clarification responses carry a question only");
      break;
    case ResponseKind::AnswerWithNotice:
      if (!r.question || !r.answer_text) {
        fail(ErrorCode::InvalidArgument, "answer_with_notice responses carry an answer and a question");
      }
      break;
  }
  if (r.trace_id.empty()) fail(ErrorCode::InvalidArgument, "response has no trace_id");
}

void to_json(Json& j, const QueryResponse& v) {
  j = Json{{"kind", to_string(v.kind)},
           {"session_id", v.session_id},
           {"answer_text", v.answer_text ? Json(*v.answer_text) : Json(nullptr)},
           {"question", v.question ? Json(*v.question) : Json(nullptr)},
           {"options", v.options},
           {"resolved_query", v.resolved_query ? Json(*v.resolved_query) : Json(nullptr)},
           {"trace_id", v.trace_id}};
}

void from_json(const Json& j, QueryResponse& v) {
  v.kind = parse_response_kind(j.at("kind").get<std::string>());
  v.session_id = j.at("session_id").get<std::string>();
  v.answer_text = optional_string(j, "answer_text");
  v.question = optional_string(j, "question");
  v.options = j.at("options").get<std::vector<ClarificationOption>>();
  v.resolved_query.reset();
  if (auto it = j.find("resolved_query"); it != j.end() && !it->is_null()) v.resolved_query = it->get<ResolvedQuery>();
  v.trace_id = j.at("trace_id").get<std::string>();
  validate_response(v);
}

std::string stub_answer(std::string_view query_text, const std::optional<std::string>& assumption) {
  std::string out = "[stub answer] " + std::string(query_text);
  if (assumption) out += " (assuming " + *assumption + ")";
  return out;
}

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyQuery:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownOption:
    case ErrorCode::InvalidCount:
    case ErrorCode::LengthMismatch:
    case ErrorCode::Empty:
      return 400;
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownRef:
      return 404;
    case ErrorCode::NoPending:
    case ErrorCode::NotAmbiguous:
      return 409;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BackendTimeout:
    case ErrorCode::MalformedResponse:
    case ErrorCode::EmbedderUnavailable:
      return 502;
    default:
      return 500;
  }
}

Json error_body(std::string_view code, std::string_view message, std::string_view trace_id) {
  return Json{{"error", {{"code", code}, {"message", message}}}, {"trace_id", trace_id}};
}

std::shared_ptr<LlmBackend> make_backend(const BackendSettings& settings) {
  if (settings.kind == "mock") {
    return std::make_shared<MockBackend>(settings.mock_rules_path.empty() ? RuleTable{}
                                                                          : load_mock_rules(settings.mock_rules_path));
  }
  if (settings.kind == "http") return std::make_shared<HttpBackend>(settings.http);
  fail(ErrorCode::ConfigError, "unknown backend '" + settings.kind + "'");
}

Service::Service(std::shared_ptr<StoreHandle> store, AgentRegistry registry, std::shared_ptr<LlmBackend> backend,
                 ServiceOptions options)
    : store_(std::move(store)),
      registry_(std::move(registry)),
      backend_(std::move(backend)),
      options_(std::move(options)),
      sessions_(options_.session_ttl, options_.clock),
      trace_salt_(std::random_device{}()) {
  if (!store_) store_ = std::make_shared<StoreHandle>();
  if (!backend_) fail(ErrorCode::InvalidArgument, "service needs a backend");
}

std::unique_ptr<Service> Service::from_config(const ServiceConfig& config, std::ostream* log) {
  auto store = std::make_shared<StoreHandle>();
  if (!config.store_path.empty()) store->reload(config.store_path);
  ServiceOptions opts;
  opts.surface_policy = config.surface_policy;
  opts.prompt.history_window = config.history_window;
  opts.max_tokens = config.max_tokens;
  opts.session_ttl = config.session_ttl;
  opts.cors_origin = config.cors_origin;
  opts.snapshot_dir = config.snapshot_dir;
  opts.debug_trace = config.debug_trace;
  opts.log = log;
  auto service =
      std::make_unique<Service>(store, make_registry(config.agents), make_backend(config.backend), std::move(opts));
  if (!config.snapshot_dir.empty() && std::filesystem::is_directory(config.snapshot_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(config.snapshot_dir)) {
      if (entry.path().extension() == ".json") service->sessions().restore(SessionManager::load_snapshot(entry.path()));
    }
  }
  return service;
}

std::string Service::new_trace_id() {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08" PRIx64 "-%06" PRIu64, static_cast<std::uint64_t>(trace_salt_ & 0xffffffffU),
                static_cast<std::uint64_t>(++trace_counter_));
  return buf;
}

void Service::log_line(const Json& line) const {
  if (!options_.log) return;
  std::lock_guard lock(log_mu_);
  *options_.log << line.dump() << '\n';
  options_.log->flush();
}

PipelineConfig Service::pipeline_config(const std::string& trace_id) const {
  PipelineConfig pc;
  pc.surface_policy = options_.surface_policy;
  pc.prompt = options_.prompt;
  pc.execution = options_.execution;
  pc.max_tokens = options_.max_tokens;
  pc.trace = options_.debug_trace ? options_.log : nullptr;
  pc.trace_id = trace_id;
  return pc;
}

void Service::persist(const std::string& session_id) const {
  if (!options_.snapshot_dir.empty()) sessions_.save_snapshot(session_id, options_.snapshot_dir);
}

QueryResponse Service::respond(Session& session, const Query& query, const std::string& trace_id,
                               bool append_user_turn) {
  auto outcome = disambiguate_unified(query, session.turns, registry_, store_->snapshot(), *backend_,
                                      pipeline_config(trace_id));
  if (append_user_turn) append_turn(session, ChatRole::User, query.text);

  QueryResponse r;
  r.session_id = session.session_id;
  r.trace_id = trace_id;
  const auto& result = outcome.result;
  if (!result.decision.ambiguous()) {
    session.pending.reset();
    r.kind = ResponseKind::Answer;
    r.answer_text = stub_answer(query.text);
    append_turn(session, ChatRole::Assistant, *r.answer_text);
    return r;
  }
  if (result.surface_mode == SurfaceMode::AnswerFirst) {
    r.kind = ResponseKind::AnswerWithNotice;
    r.answer_text = stub_answer(query.text, outcome.best_guess);
    append_turn(session, ChatRole::Assistant, *r.answer_text);
  } else {
    r.kind = ResponseKind::Clarification;
  }
  std::vector<std::string> warnings;
  session = record_pending(std::move(session), query, result, &warnings);
  for (const auto& w : warnings) log_line(Json{{"trace_id", trace_id}, {"warning", w}});
  r.question = result.decision.clarification_question();
  r.options = result.options;
  return r;
}

HandlerResult Service::post_query(const std::string& body, const std::string& trace_id) {
  return guarded(trace_id, [&] {
    const auto j = parse_body(body);
    const auto sid = session_id_of(j);
    const auto query = validate_query(required_string(j, "text"), sid);
    sessions_.expire_idle();
    QueryResponse out;
    sessions_.with_session(sid, true, [&](Session& s) { out = respond(s, query, trace_id, true); });
    persist(sid);
    return HandlerResult{200, Json(out)};
  });
}

HandlerResult Service::post_clarify(const std::string& body, const std::string& trace_id) {
  return guarded(trace_id, [&] {
    const auto j = parse_body(body);
    const auto sid = session_id_of(j);
    const auto option_id = optional_string(j, "option_id");
    const auto answer = optional_string(j, "answer_text");
    if (option_id.has_value() == answer.has_value()) {
      fail(ErrorCode::InvalidArgument, "exactly one of option_id and answer_text must be given");
    }
    sessions_.expire_idle();
    QueryResponse out;
    sessions_.with_session(sid, false, [&](Session& s) {
      auto resolved = option_id ? resolve_with_option(s, *option_id) : resolve_with_text(s, *answer, *backend_);
      const auto query = validate_query(resolved.text, sid);
      out = respond(s, query, trace_id, false);
      out.resolved_query = std::move(resolved);
    });
    persist(sid);
    return HandlerResult{200, Json(out)};
  });
}

HandlerResult Service::get_session(const std::string& session_id, const std::string& trace_id) const {
  return guarded(trace_id, [&] {
    auto s = sessions_.get(session_id);
    if (!s) fail(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
    return HandlerResult{200, Json(*s)};
  });
}

HandlerResult Service::get_health(const std::string& trace_id) const {
  return guarded(trace_id, [&] {
    const auto store = store_->snapshot();
    Json agents = Json::array();
    for (const auto& a : registry_.enabled()) agents.push_back(a->id());
    return HandlerResult{200, Json{{"status", "ok"},
                                   {"backend", backend_->kind()},
                                   {"store",
                                    {{"entities", store->entities().size()},
                                     {"products", store->products().size()},
                                     {"concepts", store->concepts().size()}}},
                                   {"agents", agents},
                                   {"sessions", sessions_.size()},
                                   {"trace_id", trace_id}}};
  });
}

}  // namespace clarify
