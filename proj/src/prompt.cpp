#include "clarify/prompt.hpp"

#include <algorithm>

#include "clarify/agents.hpp"
#include "clarify/text.hpp"

namespace clarify {

namespace {

constexpr std::string_view kUnifiedPreamble =
    "You are the disambiguation step of an enterprise AI assistant. Downstream agents have inspected the user's "
    "query; their reports and domain grounding follow.";

constexpr std::string_view kNoAgentOutput = "No agent reported an ambiguity or domain terms.";

}  // namespace

std::string render_match_line(const AgentReport& report, std::string_view query_text) {
  const auto& matches = report.matches();
  if (matches.empty()) return {};
  std::vector<std::string> labels;
  for (const auto& m : matches) labels.push_back(m.label);
  const auto& span = matches.front().surface_span;
  const bool shared = std::all_of(matches.begin(), matches.end(),
                                  [&](const MatchCandidate& m) { return m.surface_span == span; });
  if (shared && span.valid_for(query_text)) {
    return format_link_line(query_text.substr(span.start, span.length()), labels);
  }
  return format_link_line("The query", labels);
}

std::string render_agent_section(const AgentReport& report, std::string_view query_text) {
  std::string out = "### " + report.agent_id() + "\n";
  out += "Agent description: " + report.agent_description() + "\n";
  out += std::string("Ambiguity Detected: ") + (report.ambiguity_detected() ? "True" : "False") + "\n";
  if (report.ambiguity_type()) out += "Ambiguity Type: " + std::string(to_string(*report.ambiguity_type())) + "\n";
  const auto matches = render_match_line(report, query_text);
  if (!report.detail().empty() && report.detail() != matches) out += "Detail: " + report.detail() + "\n";
  if (!matches.empty()) out += "Matches: " + matches + "\n";
  if (!report.grounding().empty()) {
    std::vector<std::string> terms;
    for (const auto& g : report.grounding()) terms.push_back(g.term);
    out += "Grounding terms: " + text::join(terms, ", ") + "\n";
  }
  out.pop_back();
  return out;
}

std::string render_history(std::span<const ChatTurn> history, std::size_t window) {
  if (history.empty() || window == 0) return "Chat history: (none)";
  const auto first = history.size() > window ? history.size() - window : 0;
  std::string out = "Chat history (oldest first):";
  for (std::size_t i = first; i < history.size(); ++i) {
    out += "\n";
    out += history[i].role == ChatRole::User ? "User: " : "Assistant: ";
    out += history[i].text;
  }
  return out;
}

std::string unified_instructions(bool conservative) {
  std::string out =
      "Decide whether the current user query is ambiguous, using the agent reports, the domain grounding and the "
      "chat history. Make the decision and, if one is needed, write the clarification question in this same "
      "response.\n"
      "- A query that can be answered as it stands is not ambiguous.\n"
      "- For an ambiguous query, write one short clarification question aimed at the detected ambiguity. When an "
      "agent lists matches, name the alternatives so the user can pick one.\n"
      "- Put the ids of the agents your question relies on in \"referenced_agents\".\n";
  if (conservative) {
    out +=
        "- Be conservative. Ask only when answering without clarification would likely be wrong; answer keyword-only "
        "queries with their most likely reading.\n";
  }
  out +=
      "Respond with one JSON object and nothing else:\n"
      "{\"ambiguous\": true or false, \"clarification_question\": string or null, \"referenced_agents\": [agent ids]}";
  return out;
}

PromptBundle build_prompt(const Query& query, std::span<const ChatTurn> history, std::span<const AgentReport> reports,
                          const PromptOptions& options) {
  PromptBundle bundle;
  bundle.preamble = std::string(kUnifiedPreamble);

  std::vector<std::string> grounding_lines;
  std::vector<std::string> seen_terms;
  for (const auto& note : options.grounding_notes) grounding_lines.push_back("- Note: " + note);
  for (const auto& r : reports) {
    for (const auto& g : r.grounding()) {
      if (std::find(seen_terms.begin(), seen_terms.end(), g.term) != seen_terms.end()) continue;
      seen_terms.push_back(g.term);
      std::string line = "- " + g.term + ": " + g.definition;
      if (!g.keywords.empty()) line += " (keywords: " + text::join(g.keywords, ", ") + ")";
      grounding_lines.push_back(std::move(line));
    }
  }
  bundle.grounding_section = text::join(grounding_lines, "\n");

  bundle.conversation_section =
      render_history(history, options.history_window) + "\nCurrent user query: " + query.text;

  for (const auto& r : reports) {
    if (!r.has_output()) continue;
    bundle.agent_sections.push_back(AgentSection{r.agent_id(), render_agent_section(r, query.text)});
  }
  bundle.instruction_section = unified_instructions(options.conservative);
  return bundle;
}

std::string PromptBundle::render() const {
  std::string out = preamble.empty() ? std::string() : preamble + "\n\n";
  if (!grounding_section.empty()) out += "## Domain grounding\n" + grounding_section + "\n\n";
  out += "## Conversation\n" + conversation_section + "\n\n";
  if (agent_block) {
    out += "## Agent reports\n";
    if (agent_sections.empty()) {
      out += kNoAgentOutput;
    } else {
      for (std::size_t i = 0; i < agent_sections.size(); ++i) {
        if (i) out += "\n\n";
        out += agent_sections[i].text;
      }
    }
    out += "\n\n";
  }
  if (!fewshot_examples.empty()) {
    out += "## Examples\n";
    for (std::size_t i = 0; i < fewshot_examples.size(); ++i) {
      if (i) out += "\n\n";
      out += fewshot_examples[i];
    }
    out += "\n\n";
  }
  out += "## Instructions\n" + instruction_section + "\n";
  return out;
}

std::vector<std::string> PromptBundle::agent_ids() const {
  std::vector<std::string> out;
  for (const auto& s : agent_sections) out.push_back(s.agent_id);
  return out;
}

}  // namespace clarify
