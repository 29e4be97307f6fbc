#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clarify/domain.hpp"

namespace clarify {

/// Version tag of the unified instruction wording. Bump it whenever the
/// template text changes; the golden prompt tests pin the text.
inline constexpr std::string_view kUnifiedTemplateVersion = "unified-v1";

struct PromptOptions {
  std::size_t history_window = 8;  // most recent turns included verbatim
  bool conservative = true;        // extra instruction to ask only when necessary
  std::vector<std::string> grounding_notes;  // enterprise-specific instructions
};

struct AgentSection {
  std::string agent_id;
  std::string text;

  bool operator==(const AgentSection&) const = default;
};

/// Ordered pieces of one prompt. `render` is a pure function of the fields.
struct PromptBundle {
  std::string preamble;
  std::string grounding_section;
  std::string conversation_section;
  std::vector<AgentSection> agent_sections;  // registration order
  std::string instruction_section;
  std::vector<std::string> fewshot_examples;  // baseline prompts only
  bool agent_block = true;                    // false for the baseline stages

  std::string render() const;
  std::vector<std::string> agent_ids() const;

  bool operator==(const PromptBundle&) const = default;
};

/// Renders one report in the prompt's agent-section format:
///   Agent description: ...
///   Ambiguity Detected: True|False
///   Matches: <SPAN> can be linked to <label1>, <label2>, ...
std::string render_agent_section(const AgentReport& report, std::string_view query_text);

/// The "Matches:" payload for a report, or empty when it has no matches.
std::string render_match_line(const AgentReport& report, std::string_view query_text);

std::string render_history(std::span<const ChatTurn> history, std::size_t window);

std::string unified_instructions(bool conservative);

/// Unified single-pass prompt. A section is emitted for each report that
/// detected ambiguity or carries grounding; grounding definitions go to the
/// grounding section.
PromptBundle build_prompt(const Query& query, std::span<const ChatTurn> history,
                          std::span<const AgentReport> reports, const PromptOptions& options = {});

}  // namespace clarify
