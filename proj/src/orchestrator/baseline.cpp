#include "clarify/codec.hpp"
#include "clarify/orchestrator.hpp"
#include "clarify/text.hpp"
#include "trace.hpp"

namespace clarify {

namespace {

constexpr std::string_view kBaselinePreamble = "You are part of the query pipeline of an enterprise AI assistant.";

// First embedded JSON object that has `key` with the wanted type.
std::optional<Json> json_field(std::string_view raw, const char* key) {
  auto obj = extract_json_object(raw);
  if (!obj) return std::nullopt;
  auto j = Json::parse(*obj);
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  return *it;
}

}  // namespace

const std::vector<FewShotExample>& default_fewshot_examples() {
  static const std::vector<FewShotExample> examples{
      {"show me the schema", "Which dataset's schema would you like to see?"},
      {"delete it", "Which item would you like me to delete?"},
      {"ingestion status", "Which dataset or source do you want the ingestion status for?"},
      {"QRS789", "What would you like to know about \"QRS789\"?"},
      {"how many profiles were added recently", "Which time range should \"recently\" cover?"},
      {"compare those two", "Which two items would you like to compare?"},
      {"is the destination working", "Which destination are you asking about?"},
      {"show activity over time", "Over what time span should I show the activity?"},
      {"fix the error", "Which error are you seeing, and where does it appear?"},
      {"what does this field mean", "Which field are you asking about, and in which schema?"},
  };
  return examples;
}

std::string render_fewshot_example(const FewShotExample& ex) {
  return "Query: " + ex.query + "\nClarification question: " + ex.clarification_question;
}

std::string baseline_rewrite_prompt(const Query& query, std::span<const ChatTurn> history, std::size_t window) {
  return std::string(kBaselinePreamble) +
         "\n\nTask: rewrite\nRewrite the latest user query as a standalone query, resolving references to earlier "
         "turns of the chat. If nothing needs resolving, return the query unchanged.\n\n" +
         render_history(history, window) + "\nQuery: " + query.text +
         "\n\nRespond with one JSON object: {\"rewritten_query\": string}\n";
}

std::string baseline_classify_prompt(std::string_view rewritten_query) {
  return std::string(kBaselinePreamble) +
         "\n\nTask: classify\nDecide whether the query below needs a clarification question before it can be "
         "answered.\nQuery: " +
         std::string(rewritten_query) + "\n\nRespond with one JSON object: {\"ambiguous\": true or false}\n";
}

PromptBundle baseline_clarify_bundle(std::string_view rewritten_query, std::span<const FewShotExample> fewshot) {
  PromptBundle bundle;
  bundle.preamble = std::string(kBaselinePreamble);
  bundle.agent_block = false;
  bundle.conversation_section = "Query: " + std::string(rewritten_query);
  for (const auto& ex : fewshot) bundle.fewshot_examples.push_back(render_fewshot_example(ex));
  bundle.instruction_section =
      "Task: clarify\nThe query is ambiguous. Write one short clarification question for it in the style of the "
      "examples.\nRespond with one JSON object: {\"clarification_question\": string}";
  return bundle;
}

PipelineOutcome disambiguate_baseline(const Query& query, std::span<const ChatTurn> history, LlmBackend& backend,
                                      std::span<const FewShotExample> fewshot, const PipelineConfig& config) {
  if (fewshot.size() != kBaselineFewShotCount) {
    fail(ErrorCode::InvalidArgument, "baseline needs exactly " + std::to_string(kBaselineFewShotCount) +
                                         " few-shot examples, got " + std::to_string(fewshot.size()));
  }
  PipelineOutcome outcome;
  detail::StageTracer tracer(config, "baseline", outcome);
  CountingBackend counted(backend);
  auto call = [&](std::string prompt) {
    return counted.complete(CompletionRequest{std::move(prompt), config.max_tokens, config.temperature});
  };
  auto finish = [&](LlmDecision decision) {
    outcome.result.decision = std::move(decision);
    outcome.result.llm_calls_used = counted.stats().total_calls;
    return outcome;
  };
  auto backend_failure = [&](const char* stage, const Error& e) {
    tracer.finish(stage, {std::string(to_string(e.code())) + ": " + e.what() + "; treating query as not ambiguous"});
    return finish(LlmDecision::not_ambiguous());
  };

  // Stage 1: query rewriting from chat history.
  std::string rewritten = query.text;
  try {
    auto raw = call(baseline_rewrite_prompt(query, history, config.prompt.history_window));
    auto field = json_field(raw, "rewritten_query");
    if (field && field->is_string() && !text::trim(field->get<std::string>()).empty()) {
      rewritten = text::trim(field->get<std::string>());
      tracer.finish("rewrite");
    } else {
      tracer.finish("rewrite", {"rewrite output unusable; keeping the original query"});
    }
  } catch (const Error& e) {
    return backend_failure("rewrite", e);
  }

  // Stage 2: binary ambiguity classification.
  bool ambiguous = false;
  try {
    auto raw = call(baseline_classify_prompt(rewritten));
    auto field = json_field(raw, "ambiguous");
    if (field && field->is_boolean()) {
      ambiguous = field->get<bool>();
      tracer.finish("classify");
    } else {
      tracer.finish("classify", {"classifier output unparsable; treating query as not ambiguous"});
    }
  } catch (const Error& e) {
    return backend_failure("classify", e);
  }

  outcome.prompt = baseline_clarify_bundle(rewritten, fewshot);
  if (!ambiguous) return finish(LlmDecision::not_ambiguous());

  // Stage 3: few-shot clarification question.
  try {
    auto raw = call(outcome.prompt.render());
    std::string question;
    if (auto field = json_field(raw, "clarification_question"); field && field->is_string()) {
      question = text::trim(field->get<std::string>());
    } else if (!extract_json_object(raw)) {
      question = text::trim(raw.substr(0, raw.find('\n')));
    }
    if (question.empty()) {
      tracer.finish("clarify", {"clarification output unusable; treating query as not ambiguous"});
      return finish(LlmDecision::not_ambiguous());
    }
    tracer.finish("clarify");
    return finish(LlmDecision::ask(std::move(question)));
  } catch (const Error& e) {
    return backend_failure("clarify", e);
  }
}

}  // namespace clarify
