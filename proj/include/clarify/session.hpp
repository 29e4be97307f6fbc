#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clarify/codec.hpp"
#include "clarify/domain.hpp"
#include "clarify/llm_backend.hpp"

namespace clarify {

struct PendingClarification {
  Query original_query;
  std::string question;
  std::vector<ClarificationOption> options;
  std::optional<ByteSpan> ambiguous_span;

  bool operator==(const PendingClarification&) const = default;
};

struct Session {
  std::string session_id;
  std::vector<ChatTurn> turns;
  std::optional<PendingClarification> pending;

  bool operator==(const Session&) const = default;
};

enum class Provenance { OptionClick, FreeText };

struct ResolvedQuery {
  std::string text;
  Provenance provenance = Provenance::OptionClick;
  std::optional<std::string> source_option;

  bool operator==(const ResolvedQuery&) const = default;
};

/// 1 to 128 characters from [A-Za-z0-9._-], not starting with '.'.
bool valid_session_id(std::string_view id) noexcept;

void append_turn(Session& session, ChatRole role, std::string text);

/// Stores the clarification from an ambiguous result and appends the question
/// as an assistant turn. An existing pending clarification is replaced and a
/// warning is added. Throws NotAmbiguous for unambiguous results.
Session record_pending(Session session, const Query& original, const DisambiguationResult& result,
                       std::vector<std::string>* warnings = nullptr);

/// Applies a clicked option. With a known ambiguous span the option label is
/// spliced over it; otherwise a "regarding <label>" suffix is appended. Clears the
/// pending clarification. On error the session is left untouched.
ResolvedQuery resolve_with_option(Session& session, std::string_view option_id);

std::string resolve_prompt(const PendingClarification& pending, std::string_view answer);

/// Rewrites the pending query with a free-text answer using one backend call.
/// On any failure (including backend errors) the session is left untouched.
ResolvedQuery resolve_with_text(Session& session, std::string_view answer, LlmBackend& backend);

void to_json(Json& j, const PendingClarification& v);
void from_json(const Json& j, PendingClarification& v);
void to_json(Json& j, const Session& v);
void from_json(const Json& j, Session& v);
void to_json(Json& j, const ResolvedQuery& v);
void from_json(const Json& j, ResolvedQuery& v);
void to_json(Json& j, Provenance v);
void from_json(const Json& j, Provenance& v);

/// In-memory session table. Work on one session is serialized by a
/// per-session lock; different sessions proceed concurrently. Sessions idle
/// longer than the TTL are dropped by `expire_idle`.
class SessionManager {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit SessionManager(std::chrono::seconds ttl = std::chrono::minutes(30), Clock clock = {});

  /// Runs `fn` with exclusive access to the session. Creates an empty session
  /// when `create` is set, otherwise throws UnknownSession.
  void with_session(const std::string& session_id, bool create, const std::function<void(Session&)>& fn);

  /// Copy of the session without touching its idle timer.
  std::optional<Session> get(const std::string& session_id) const;

  std::size_t expire_idle();
  std::size_t size() const;

  /// Writes `<dir>/<session_id>.json` (canonical JSON).
  void save_snapshot(const std::string& session_id, const std::filesystem::path& dir) const;
  static Session load_snapshot(const std::filesystem::path& path);
  /// Inserts or overwrites a session, e.g. from a snapshot.
  void restore(Session session);

 private:
  struct Entry {
    std::mutex mu;
    Session session;
    std::chrono::steady_clock::time_point last_active;
  };

  std::shared_ptr<Entry> find_entry(const std::string& id) const;

  std::chrono::seconds ttl_;
  Clock clock_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace clarify
