#include <algorithm>

#include "clarify/codec.hpp"
#include "clarify/orchestrator.hpp"
#include "clarify/text.hpp"

namespace clarify {

std::string_view to_string(SurfacePolicy p) noexcept {
  return p == SurfacePolicy::AskFirst ? "ask_first" : "answer_first";
}

SurfacePolicy parse_surface_policy(std::string_view s) {
  if (s == "ask_first") return SurfacePolicy::AskFirst;
  if (s == "answer_first") return SurfacePolicy::AnswerFirst;
  fail(ErrorCode::ConfigError, "unknown surface policy '" + std::string(s) + "'");
}

std::optional<std::string> extract_json_object(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        std::string candidate(raw.substr(open, i - open + 1));
        if (Json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  return std::nullopt;
}

ParsedDecision parse_decision(std::string_view raw, std::span<const std::string> known_agent_ids) {
  auto unparsable = [&](const std::string& why) -> ParsedDecision {
    constexpr std::size_t kEcho = 200;
    std::string shown(raw.substr(0, kEcho));
    if (raw.size() > kEcho) shown += "...";
    fail(ErrorCode::UnparsableDecision, why + ": " + shown);
  };

  auto object = extract_json_object(raw);
  if (!object) return unparsable("no JSON object in model output");
  const Json j = Json::parse(*object);

  auto amb = j.find("ambiguous");
  if (amb == j.end() || !amb->is_boolean()) return unparsable("\"ambiguous\" missing or not a boolean");

  std::optional<std::string> question;
  if (auto q = j.find("clarification_question"); q != j.end() && !q->is_null()) {
    if (!q->is_string()) return unparsable("\"clarification_question\" is not a string");
    auto trimmed = text::trim(q->get<std::string>());
    if (!trimmed.empty()) question = std::move(trimmed);
  }

  ParsedDecision out;
  std::vector<std::string> referenced;
  auto refs = j.find("referenced_agents");
  if (refs == j.end()) refs = j.find("referenced_agent_ids");
  if (refs != j.end() && !refs->is_null()) {
    if (!refs->is_array()) return unparsable("\"referenced_agents\" is not an array");
    for (const auto& r : *refs) {
      if (!r.is_string()) {
        out.warnings.push_back("ignored non-string entry in referenced_agents");
        continue;
      }
      auto id = r.get<std::string>();
      if (std::find(known_agent_ids.begin(), known_agent_ids.end(), id) == known_agent_ids.end()) {
        out.warnings.push_back("dropped unknown referenced agent '" + id + "'");
      } else if (std::find(referenced.begin(), referenced.end(), id) == referenced.end()) {
        referenced.push_back(std::move(id));
      }
    }
  }

  const bool ambiguous = amb->get<bool>();
  if (ambiguous != question.has_value()) {
    return unparsable(ambiguous ? "ambiguous decision without a clarification question"
                                : "unambiguous decision with a clarification question");
  }
  if (!ambiguous) referenced.clear();
  out.decision = LlmDecision(ambiguous, std::move(question), std::move(referenced));
  return out;
}

}  // namespace clarify
