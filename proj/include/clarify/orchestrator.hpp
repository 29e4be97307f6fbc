#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clarify/agents.hpp"
#include "clarify/domain.hpp"
#include "clarify/error.hpp"
#include "clarify/knowledge_store.hpp"
#include "clarify/llm_backend.hpp"
#include "clarify/prompt.hpp"

namespace clarify {

enum class ExecutionMode { Parallel, Sequential };

struct AgentWarning {
  std::string agent_id;
  ErrorCode code = ErrorCode::AgentFailure;  // AgentTimeout or AgentFailure
  std::string message;
};

struct AgentRun {
  std::vector<AgentReport> reports;  // registration order, failed agents omitted
  std::vector<AgentWarning> warnings;
};

/// Runs every enabled agent, concurrently by default, each bounded by its own
/// timeout. Agents that time out, throw, or return a malformed report are
/// dropped and recorded as warnings. Sequential mode runs them in order on the
/// calling thread and only enforces timeouts after the fact.
AgentRun run_agents(const AgentContext& ctx, const AgentRegistry& registry,
                    ExecutionMode mode = ExecutionMode::Parallel);

struct ParsedDecision {
  LlmDecision decision;
  std::vector<std::string> warnings;
};

/// Extracts the first JSON object from raw model output and validates it.
/// Referenced agents not in `known_agent_ids` are dropped with a warning.
/// Throws UnparsableDecision when no valid decision object is found.
ParsedDecision parse_decision(std::string_view raw, std::span<const std::string> known_agent_ids);

/// Finds the first balanced, parseable JSON object embedded in `raw`.
std::optional<std::string> extract_json_object(std::string_view raw);

enum class SurfacePolicy { AskFirst, AnswerFirst };

std::string_view to_string(SurfacePolicy p) noexcept;
SurfacePolicy parse_surface_policy(std::string_view s);

struct PipelineConfig {
  SurfacePolicy surface_policy = SurfacePolicy::AskFirst;
  PromptOptions prompt;
  ExecutionMode execution = ExecutionMode::Parallel;
  int max_tokens = 512;
  double temperature = 0.0;
  std::ostream* trace = nullptr;  // JSON-lines stage trace when set
  std::string trace_id;
};

struct StageTiming {
  std::string stage;
  double elapsed_ms = 0.0;
};

struct PipelineOutcome {
  DisambiguationResult result;
  PromptBundle prompt;
  std::vector<StageTiming> stages;
  std::vector<std::string> warnings;
  std::optional<std::string> best_guess;  // product answered first under AnswerFirst
};

/// Agents, prompt assembly, exactly one completion, decision parsing. Any
/// backend or parse failure yields ambiguous=false plus a warning.
PipelineOutcome disambiguate_unified(const Query& query, std::span<const ChatTurn> history,
                                     const AgentRegistry& registry, StoreSnapshot store, LlmBackend& backend,
                                     const PipelineConfig& config = {});

struct FewShotExample {
  std::string query;
  std::string clarification_question;
};

inline constexpr std::size_t kBaselineFewShotCount = 10;

/// The ten hand-written examples shipped for the baseline prompt.
const std::vector<FewShotExample>& default_fewshot_examples();

std::string render_fewshot_example(const FewShotExample& ex);
std::string baseline_rewrite_prompt(const Query& query, std::span<const ChatTurn> history, std::size_t window);
std::string baseline_classify_prompt(std::string_view rewritten_query);
PromptBundle baseline_clarify_bundle(std::string_view rewritten_query, std::span<const FewShotExample> fewshot);

/// Sequential baseline: rewrite from history, classify, then (only when
/// ambiguous) generate a clarification from few-shot examples. Two calls for
/// unambiguous queries, three otherwise. Requires exactly ten examples.
PipelineOutcome disambiguate_baseline(const Query& query, std::span<const ChatTurn> history, LlmBackend& backend,
                                      std::span<const FewShotExample> fewshot = default_fewshot_examples(),
                                      const PipelineConfig& config = {});

}  // namespace clarify
