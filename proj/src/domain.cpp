#include "clarify/domain.hpp"

#include <cstdio>
#include <set>

#include "clarify/error.hpp"
#include "clarify/text.hpp"

namespace clarify {

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

Query validate_query(std::string_view raw, std::string session_id, Timestamp received_at) {
  auto text = text::trim(raw);
  if (text.empty()) fail(ErrorCode::EmptyQuery, "query text is empty");
  return Query{std::move(text), std::move(session_id), received_at};
}

void validate_history(std::span<const ChatTurn> history) {
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].index != i) {
      fail(ErrorCode::InvalidArgument,
           "chat turn at position " + std::to_string(i) + " has index " + std::to_string(history[i].index));
    }
  }
}

AgentReport::AgentReport(std::string agent_id, std::string agent_description, bool ambiguity_detected,
                         std::optional<AmbiguityType> ambiguity_type, std::string detail,
                         std::vector<MatchCandidate> matches, std::vector<ConceptDefinition> grounding)
    : agent_id_(std::move(agent_id)),
      agent_description_(std::move(agent_description)),
      ambiguity_detected_(ambiguity_detected),
      ambiguity_type_(ambiguity_type),
      detail_(std::move(detail)),
      matches_(std::move(matches)),
      grounding_(std::move(grounding)) {
  const std::string who = "agent report '" + agent_id_ + "': ";
  if (agent_id_.empty()) fail(ErrorCode::InvalidReport, who + "agent_id is empty");
  if (agent_description_.empty()) fail(ErrorCode::InvalidReport, who + "agent_description is empty");
  if (!ambiguity_detected_ && !matches_.empty()) {
    fail(ErrorCode::InvalidReport, who + "matches present without a detected ambiguity");
  }
  if (matches_.size() == 1) fail(ErrorCode::InvalidReport, who + "a single match is not an ambiguity");
  if (ambiguity_detected_ && matches_.empty() && detail_.empty()) {
    fail(ErrorCode::InvalidReport, who + "lexical ambiguity must carry a detail");
  }
  std::set<std::string_view> labels;
  for (const auto& m : matches_) {
    if (m.surface_span.start >= m.surface_span.end) fail(ErrorCode::InvalidReport, who + "empty match span");
    if (!labels.insert(m.label).second) fail(ErrorCode::InvalidReport, who + "duplicate match label " + m.label);
  }
  for (const auto& g : grounding_) {
    if (g.term.empty()) fail(ErrorCode::InvalidReport, who + "grounding term is empty");
  }
}

AgentReport AgentReport::clear(std::string agent_id, std::string agent_description,
                               std::vector<ConceptDefinition> grounding, std::string detail) {
  return AgentReport(std::move(agent_id), std::move(agent_description), false, std::nullopt, std::move(detail), {},
                     std::move(grounding));
}

void AgentReport::check_spans(std::string_view query_text) const {
  for (const auto& m : matches_) {
    if (!m.surface_span.valid_for(query_text)) {
      fail(ErrorCode::InvalidReport, "agent report '" + agent_id_ + "': span of " + m.label + " out of range");
    }
  }
}

LlmDecision::LlmDecision(bool ambiguous, std::optional<std::string> clarification_question,
                         std::vector<std::string> referenced_agent_ids)
    : ambiguous_(ambiguous), question_(std::move(clarification_question)), referenced_(std::move(referenced_agent_ids)) {
  const bool has_question = question_ && !text::trim(*question_).empty();
  if (ambiguous_ != has_question) {
    fail(ErrorCode::InvalidDecision, ambiguous_ ? "ambiguous decision without a clarification question"
                                                : "unambiguous decision carries a clarification question");
  }
  if (!ambiguous_) question_.reset();
}

LlmDecision LlmDecision::ask(std::string question, std::vector<std::string> referenced_agent_ids) {
  return LlmDecision(true, std::move(question), std::move(referenced_agent_ids));
}

const MatchCandidate* find_candidate(const DisambiguationResult& result, const OptionPayload& payload) {
  for (const auto& report : result.agent_reports) {
    for (const auto& m : report.matches()) {
      if (m.ref_id == payload.ref_id && m.kind == payload.kind) return &m;
    }
  }
  return nullptr;
}

void validate_result(const DisambiguationResult& result) {
  if (!result.decision.ambiguous() && !result.options.empty()) {
    fail(ErrorCode::InvalidArgument, "options present on an unambiguous result");
  }
  std::set<std::string_view> ids;
  for (const auto& opt : result.options) {
    if (!ids.insert(opt.option_id).second) fail(ErrorCode::InvalidArgument, "duplicate option id " + opt.option_id);
    if (!find_candidate(result, opt.payload)) {
      fail(ErrorCode::InvalidArgument, "option " + opt.option_id + " does not resolve to any match candidate");
    }
  }
}

std::string_view to_string(ChatRole role) noexcept {
  return role == ChatRole::User ? "user" : "assistant";
}

std::string_view to_string(AmbiguityType type) noexcept {
  switch (type) {
    case AmbiguityType::Contextual: return "contextual";
    case AmbiguityType::Syntactic: return "syntactic";
    case AmbiguityType::Aleatoric: return "aleatoric";
  }
  return "contextual";
}

std::string_view to_string(SurfaceMode mode) noexcept {
  return mode == SurfaceMode::AskFirst ? "ask_first" : "answer_first";
}

ChatRole parse_chat_role(std::string_view s) {
  if (s == "user") return ChatRole::User;
  if (s == "assistant") return ChatRole::Assistant;
  fail(ErrorCode::ParseError, "unknown chat role '" + std::string(s) + "'");
}

AmbiguityType parse_ambiguity_type(std::string_view s) {
  if (s == "contextual") return AmbiguityType::Contextual;
  if (s == "syntactic") return AmbiguityType::Syntactic;
  if (s == "aleatoric") return AmbiguityType::Aleatoric;
  fail(ErrorCode::ParseError, "unknown ambiguity type '" + std::string(s) + "'");
}

SurfaceMode parse_surface_mode(std::string_view s) {
  if (s == "ask_first") return SurfaceMode::AskFirst;
  if (s == "answer_first") return SurfaceMode::AnswerFirst;
  fail(ErrorCode::ParseError, "unknown surface mode '" + std::string(s) + "'");
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss tod{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()), static_cast<int>(tod.subseconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0;
  int consumed = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6) {
    fail(ErrorCode::ParseError, "bad timestamp '" + str + "'");
  }
  std::string_view rest = s.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest.front() == '.') {
    std::size_t i = 1;
    int digits = 0;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') {
      if (digits < 3) {
        ms = ms * 10 + (rest[i] - '0');
        ++digits;
      }
      ++i;
    }
    while (digits++ < 3) ms *= 10;
    rest = rest.substr(i);
  }
  if (rest != "Z") fail(ErrorCode::ParseError, "timestamp must be UTC ('Z'): '" + str + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) fail(ErrorCode::ParseError, "bad calendar date '" + str + "'");
  return time_point_cast<milliseconds>(sys_days{ymd}) + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms};
}

}  // namespace clarify
