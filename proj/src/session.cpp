#include "clarify/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "clarify/orchestrator.hpp"
#include "clarify/text.hpp"

namespace clarify {

namespace {

// Shared span of every option's source candidate, unless an option is a
// product (products are not a span of the query) or the spans differ.
std::optional<ByteSpan> common_span(const Query& original, const DisambiguationResult& result) {
  std::optional<ByteSpan> span;
  for (const auto& opt : result.options) {
    const auto* cand = find_candidate(result, opt.payload);
    if (!cand || cand->kind == "product") return std::nullopt;
    if (span && *span != cand->surface_span) return std::nullopt;
    span = cand->surface_span;
  }
  if (span && !span->valid_for(original.text)) return std::nullopt;
  return span;
}

const PendingClarification& require_pending(const Session& session) {
  if (!session.pending) fail(ErrorCode::NoPending, "session '" + session.session_id + "' has no pending clarification");
  return *session.pending;
}

}  // namespace

bool valid_session_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) { return text::is_alnum(c) || c == '.' || c == '_' || c == '-'; });
}

void append_turn(Session& session, ChatRole role, std::string text) {
  session.turns.push_back(ChatTurn{role, std::move(text), session.turns.size()});
}

Session record_pending(Session session, const Query& original, const DisambiguationResult& result,
                       std::vector<std::string>* warnings) {
  if (!result.decision.ambiguous()) {
    fail(ErrorCode::NotAmbiguous, "cannot record a clarification for an unambiguous result");
  }
  if (session.pending && warnings) {
    warnings->push_back("replaced pending clarification for query '" + session.pending->original_query.text + "'");
  }
  PendingClarification pending{original, *result.decision.clarification_question(), result.options,
                               common_span(original, result)};
  append_turn(session, ChatRole::Assistant, pending.question);
  session.pending = std::move(pending);
  return session;
}

ResolvedQuery resolve_with_option(Session& session, std::string_view option_id) {
  const auto& pending = require_pending(session);
  auto it = std::find_if(pending.options.begin(), pending.options.end(),
                         [&](const ClarificationOption& o) { return o.option_id == option_id; });
  if (it == pending.options.end()) {
    fail(ErrorCode::UnknownOption, "option '" + std::string(option_id) + "' is not part of the pending clarification");
  }
  const auto& original = pending.original_query.text;
  std::string text;
  if (pending.ambiguous_span) {
    const auto& sp = *pending.ambiguous_span;
    text = original.substr(0, sp.start) + it->label + original.substr(sp.end);
  } else {
    text = original + " — regarding " + it->label;
  }
  ResolvedQuery out{std::move(text), Provenance::OptionClick, it->option_id};
  std::string label = it->label;
  session.pending.reset();
  append_turn(session, ChatRole::User, std::move(label));
  return out;
}

std::string resolve_prompt(const PendingClarification& pending, std::string_view answer) {
  return "You are part of the query pipeline of an enterprise AI assistant.\n\n"
         "Task: resolve\nThe assistant asked a clarification question about an ambiguous query and the user "
         "answered it. Rewrite the original query as one standalone query that includes the answer.\n\n"
         "Original query: " +
         pending.original_query.text + "\nClarification question: " + pending.question +
         "\nUser answer: " + std::string(answer) + "\n\nRespond with one JSON object: {\"rewritten_query\": string}\n";
}

ResolvedQuery resolve_with_text(Session& session, std::string_view answer, LlmBackend& backend) {
  const auto& pending = require_pending(session);
  auto trimmed = text::trim(answer);
  if (trimmed.empty()) fail(ErrorCode::InvalidArgument, "clarification answer is empty");

  const auto raw = backend.complete(CompletionRequest{resolve_prompt(pending, trimmed)});
  std::string rewritten;
  if (auto obj = extract_json_object(raw)) {
    const auto j = Json::parse(*obj);
    if (auto f = j.find("rewritten_query"); f != j.end() && f->is_string()) rewritten = text::trim(f->get<std::string>());
  } else {
    rewritten = text::trim(raw);
  }
  if (rewritten.empty()) fail(ErrorCode::MalformedResponse, "resolution output has no rewritten query");

  session.pending.reset();
  append_turn(session, ChatRole::User, trimmed);
  return ResolvedQuery{std::move(rewritten), Provenance::FreeText, std::nullopt};
}

void to_json(Json& j, Provenance v) { j = v == Provenance::OptionClick ? "option_click" : "free_text"; }

void from_json(const Json& j, Provenance& v) {
  const auto s = j.get<std::string>();
  if (s == "option_click") {
    v = Provenance::OptionClick;
  } else if (s == "free_text") {
    v = Provenance::FreeText;
  } else {
    fail(ErrorCode::ParseError, "unknown provenance '" + s + "'");
  }
}

void to_json(Json& j, const PendingClarification& v) {
  j = Json{{"original_query", v.original_query},
           {"question", v.question},
           {"options", v.options},
           {"ambiguous_span", v.ambiguous_span ? Json(*v.ambiguous_span) : Json(nullptr)}};
}

void from_json(const Json& j, PendingClarification& v) {
  v.original_query = j.at("original_query").get<Query>();
  v.question = j.at("question").get<std::string>();
  v.options = j.at("options").get<std::vector<ClarificationOption>>();
  v.ambiguous_span.reset();
  if (auto it = j.find("ambiguous_span"); it != j.end() && !it->is_null()) v.ambiguous_span = it->get<ByteSpan>();
}

void to_json(Json& j, const Session& v) {
  j = Json{{"session_id", v.session_id},
           {"turns", v.turns},
           {"pending", v.pending ? Json(*v.pending) : Json(nullptr)}};
}

void from_json(const Json& j, Session& v) {
  v.session_id = j.at("session_id").get<std::string>();
  v.turns = j.at("turns").get<std::vector<ChatTurn>>();
  validate_history(v.turns);
  v.pending.reset();
  if (auto it = j.find("pending"); it != j.end() && !it->is_null()) v.pending = it->get<PendingClarification>();
}

void to_json(Json& j, const ResolvedQuery& v) {
  j = Json{{"text", v.text},
           {"provenance", v.provenance},
           {"source_option", v.source_option ? Json(*v.source_option) : Json(nullptr)}};
}

void from_json(const Json& j, ResolvedQuery& v) {
  v.text = j.at("text").get<std::string>();
  v.provenance = j.at("provenance").get<Provenance>();
  v.source_option.reset();
  if (auto it = j.find("source_option"); it != j.end() && !it->is_null()) v.source_option = it->get<std::string>();
}

SessionManager::SessionManager(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {
  if (ttl_.count() <= 0) fail(ErrorCode::InvalidArgument, "session TTL must be positive");
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
}

std::shared_ptr<SessionManager::Entry> SessionManager::find_entry(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionManager::with_session(const std::string& session_id, bool create,
                                  const std::function<void(Session&)>& fn) {
  if (!valid_session_id(session_id)) fail(ErrorCode::InvalidArgument, "invalid session id '" + session_id + "'");
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
      if (!create) fail(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
      entry = std::make_shared<Entry>();
      entry->session.session_id = session_id;
      sessions_.emplace(session_id, entry);
    } else {
      entry = it->second;
    }
    entry->last_active = clock_();
  }
  std::lock_guard lock(entry->mu);
  // Work on a copy so a throwing callback leaves the stored session unchanged.
  Session working = entry->session;
  fn(working);
  entry->session = std::move(working);
}

std::optional<Session> SessionManager::get(const std::string& session_id) const {
  auto entry = find_entry(session_id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mu);
  return entry->session;
}

std::size_t SessionManager::expire_idle() {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    auto& entry = it->second;
    std::unique_lock busy(entry->mu, std::try_to_lock);
    if (busy.owns_lock() && now - entry->last_active > ttl_) {
      busy.unlock();
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionManager::save_snapshot(const std::string& session_id, const std::filesystem::path& dir) const {
  auto session = get(session_id);
  if (!session) fail(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
  std::filesystem::create_directories(dir);
  const auto target = dir / (session_id + ".json");
  const auto tmp = dir / (session_id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write snapshot " + tmp.string());
    out << Json(*session).dump() << '\n';
  }
  std::filesystem::rename(tmp, target);
}

Session SessionManager::load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read snapshot " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return decode<Session>(parse_json(buf.str(), path.string()), path.string());
}

void SessionManager::restore(Session session) {
  if (!valid_session_id(session.session_id)) {
    fail(ErrorCode::InvalidArgument, "invalid session id '" + session.session_id + "'");
  }
  auto entry = std::make_shared<Entry>();
  entry->last_active = clock_();
  const auto id = session.session_id;
  entry->session = std::move(session);
  std::lock_guard lock(mu_);
  sessions_[id] = std::move(entry);
}

}  // namespace clarify
