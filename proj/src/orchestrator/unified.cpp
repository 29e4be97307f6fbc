#include <algorithm>
#include <set>

#include "clarify/orchestrator.hpp"
#include "trace.hpp"

namespace clarify {

namespace {

std::vector<ClarificationOption> derive_options(const LlmDecision& decision, const std::vector<AgentReport>& reports) {
  std::vector<ClarificationOption> options;
  if (!decision.ambiguous()) return options;
  const auto& refs = decision.referenced_agent_ids();
  std::set<std::string> seen;
  for (const auto& r : reports) {
    const bool chosen = refs.empty() ? r.ambiguity_detected()
                                     : std::find(refs.begin(), refs.end(), r.agent_id()) != refs.end();
    if (!chosen) continue;
    for (const auto& m : r.matches()) {
      if (!seen.insert(m.ref_id).second) continue;
      options.push_back(ClarificationOption{"opt_" + std::to_string(options.size() + 1), m.label,
                                            OptionPayload{m.ref_id, m.kind}});
    }
  }
  return options;
}

}  // namespace

PipelineOutcome disambiguate_unified(const Query& query, std::span<const ChatTurn> history,
                                     const AgentRegistry& registry, StoreSnapshot store, LlmBackend& backend,
                                     const PipelineConfig& config) {
  if (!store) store = std::make_shared<const KnowledgeStore>();
  PipelineOutcome outcome;
  detail::StageTracer tracer(config, "unified", outcome);

  AgentContext ctx{query, std::vector<ChatTurn>(history.begin(), history.end()), store};
  auto run = run_agents(ctx, registry, config.execution);
  std::vector<std::string> agent_warnings;
  for (const auto& w : run.warnings) agent_warnings.push_back(w.agent_id + ": " + w.message);
  tracer.finish("agents", std::move(agent_warnings));

  outcome.prompt = build_prompt(query, history, run.reports, config.prompt);
  const auto rendered = outcome.prompt.render();
  tracer.finish("prompt");

  CountingBackend counted(backend);
  std::optional<std::string> raw;
  try {
    raw = counted.complete(CompletionRequest{rendered, config.max_tokens, config.temperature});
    tracer.finish("llm");
  } catch (const Error& e) {
    tracer.finish("llm", {std::string(to_string(e.code())) + ": " + e.what() + "; treating query as not ambiguous"});
  }

  LlmDecision decision;
  if (raw) {
    const auto ids = outcome.prompt.agent_ids();
    try {
      auto parsed = parse_decision(*raw, ids);
      decision = std::move(parsed.decision);
      tracer.finish("parse", std::move(parsed.warnings));
    } catch (const Error& e) {
      tracer.finish("parse", {std::string(to_string(e.code())) + ": " + e.what() + "; treating query as not ambiguous"});
    }
  }

  auto& result = outcome.result;
  result.options = derive_options(decision, run.reports);
  result.decision = std::move(decision);
  result.surface_mode = SurfaceMode::AskFirst;
  if (result.decision.ambiguous() && config.surface_policy == SurfacePolicy::AnswerFirst) {
    const bool only_product = std::all_of(run.reports.begin(), run.reports.end(), [](const AgentReport& r) {
      return !r.ambiguity_detected() || r.agent_id() == agent_ids::kProduct;
    });
    const bool product_detected = std::any_of(run.reports.begin(), run.reports.end(), [](const AgentReport& r) {
      return r.ambiguity_detected() && r.agent_id() == agent_ids::kProduct;
    });
    if (only_product && product_detected) {
      if (auto best = best_guess_product(match_products(*store, query.text))) {
        result.surface_mode = SurfaceMode::AnswerFirst;
        outcome.best_guess = store->products()[*best].display_name;
      }
    }
  }
  result.llm_calls_used = counted.stats().total_calls;
  result.agent_reports = std::move(run.reports);
  return outcome;
}

}  // namespace clarify
