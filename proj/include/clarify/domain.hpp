#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clarify {

/// UTC wall clock at millisecond resolution. Informational only.
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;

Timestamp now_utc();

struct Query {
  std::string text;
  std::string session_id;
  Timestamp received_at{};

  bool operator==(const Query&) const = default;
};

/// Trims `raw` and rejects empty input with ErrorCode::EmptyQuery.
Query validate_query(std::string_view raw, std::string session_id, Timestamp received_at = now_utc());

enum class ChatRole { User, Assistant };

struct ChatTurn {
  ChatRole role = ChatRole::User;
  std::string text;
  std::size_t index = 0;

  bool operator==(const ChatTurn&) const = default;
};

/// Throws InvalidArgument unless indices run 0, 1, 2, ...
void validate_history(std::span<const ChatTurn> history);

enum class AmbiguityType { Contextual, Syntactic, Aleatoric };

/// Half-open byte range into UTF-8 query text.
struct ByteSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool valid_for(std::string_view text) const noexcept { return start < end && end <= text.size(); }
  bool operator==(const ByteSpan&) const = default;
  auto operator<=>(const ByteSpan&) const = default;
};

struct MatchCandidate {
  ByteSpan surface_span;
  std::string label;
  std::string kind;
  std::string ref_id;

  bool operator==(const MatchCandidate&) const = default;
};

struct ConceptDefinition {
  std::string term;
  std::string definition;
  std::vector<std::string> keywords;

  bool operator==(const ConceptDefinition&) const = default;
};

/// One agent's verdict on a query. Immutable; the constructor enforces:
///  - agent_description is non-empty
///  - no matches unless ambiguity was detected
///  - a non-empty match list has at least two entries with unique labels
///  - a detection without matches carries a non-empty detail
class AgentReport {
 public:
  AgentReport(std::string agent_id, std::string agent_description, bool ambiguity_detected,
              std::optional<AmbiguityType> ambiguity_type, std::string detail,
              std::vector<MatchCandidate> matches, std::vector<ConceptDefinition> grounding);

  /// A report that detected nothing, optionally carrying grounding.
  static AgentReport clear(std::string agent_id, std::string agent_description,
                           std::vector<ConceptDefinition> grounding = {}, std::string detail = {});

  const std::string& agent_id() const noexcept { return agent_id_; }
  const std::string& agent_description() const noexcept { return agent_description_; }
  bool ambiguity_detected() const noexcept { return ambiguity_detected_; }
  const std::optional<AmbiguityType>& ambiguity_type() const noexcept { return ambiguity_type_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::vector<MatchCandidate>& matches() const noexcept { return matches_; }
  const std::vector<ConceptDefinition>& grounding() const noexcept { return grounding_; }

  /// Whether the report contributes anything to a prompt.
  bool has_output() const noexcept { return ambiguity_detected_ || !grounding_.empty(); }

  /// Throws InvalidReport if any match span falls outside `query_text`.
  void check_spans(std::string_view query_text) const;

  bool operator==(const AgentReport&) const = default;

 private:
  std::string agent_id_;
  std::string agent_description_;
  bool ambiguity_detected_ = false;
  std::optional<AmbiguityType> ambiguity_type_;
  std::string detail_;
  std::vector<MatchCandidate> matches_;
  std::vector<ConceptDefinition> grounding_;
};

/// The unified model verdict. `ambiguous` holds exactly when a non-empty
/// clarification question is present.
class LlmDecision {
 public:
  LlmDecision() = default;
  LlmDecision(bool ambiguous, std::optional<std::string> clarification_question,
              std::vector<std::string> referenced_agent_ids);

  static LlmDecision not_ambiguous() { return {}; }
  static LlmDecision ask(std::string question, std::vector<std::string> referenced_agent_ids = {});

  bool ambiguous() const noexcept { return ambiguous_; }
  const std::optional<std::string>& clarification_question() const noexcept { return question_; }
  const std::vector<std::string>& referenced_agent_ids() const noexcept { return referenced_; }

  bool operator==(const LlmDecision&) const = default;

 private:
  bool ambiguous_ = false;
  std::optional<std::string> question_;
  std::vector<std::string> referenced_;
};

struct OptionPayload {
  std::string ref_id;
  std::string kind;

  bool operator==(const OptionPayload&) const = default;
};

struct ClarificationOption {
  std::string option_id;
  std::string label;
  OptionPayload payload;

  bool operator==(const ClarificationOption&) const = default;
};

enum class SurfaceMode { AskFirst, AnswerFirst };

struct DisambiguationResult {
  LlmDecision decision;
  std::vector<ClarificationOption> options;
  SurfaceMode surface_mode = SurfaceMode::AskFirst;
  std::size_t llm_calls_used = 0;
  std::vector<AgentReport> agent_reports;

  bool operator==(const DisambiguationResult&) const = default;
};

/// Throws InvalidArgument if options appear without ambiguity, option ids
/// repeat, or an option payload has no matching candidate in agent_reports.
void validate_result(const DisambiguationResult& result);

/// Finds the candidate an option was built from, or nullptr.
const MatchCandidate* find_candidate(const DisambiguationResult& result, const OptionPayload& payload);

std::string_view to_string(ChatRole role) noexcept;
std::string_view to_string(AmbiguityType type) noexcept;
std::string_view to_string(SurfaceMode mode) noexcept;
ChatRole parse_chat_role(std::string_view s);
AmbiguityType parse_ambiguity_type(std::string_view s);
SurfaceMode parse_surface_mode(std::string_view s);

std::string format_timestamp(Timestamp ts);
Timestamp parse_timestamp(std::string_view s);

}  // namespace clarify
