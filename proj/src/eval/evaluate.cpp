#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "clarify/eval.hpp"
#include "clarify/text.hpp"

namespace clarify::eval {

namespace {

template <typename T>
std::optional<T> opt_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

Json opt_json(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }
Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// Applies `fn` to every non-blank line; errors become ParseError "<source>:<line>: ...".
template <typename T, typename Fn>
std::vector<T> parse_jsonl(std::string_view text, const std::string& source, Fn fn) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text::trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    try {
      out.push_back(fn(Json::parse(line)));
    } catch (const Json::exception& e) {
      fail(ErrorCode::ParseError, where + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, where + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void reject_duplicate_ids(const std::vector<T>& items, const std::string& source) {
  std::set<std::string> seen;
  for (const auto& x : items) {
    if (!seen.insert(x.example_id).second) {
      fail(ErrorCode::DuplicateKey, source + ": duplicate example_id '" + x.example_id + "'");
    }
  }
}

double best_over_gold(const std::vector<std::string>& golds, const std::function<double(const std::string&)>& score) {
  double best = -1.0;
  for (const auto& g : golds) best = std::max(best, score(g));
  return best;
}

}  // namespace

std::string_view to_string(PipelineKind k) noexcept { return k == PipelineKind::Unified ? "unified" : "baseline"; }

PipelineKind parse_pipeline_kind(std::string_view s) {
  if (s == "unified") return PipelineKind::Unified;
  if (s == "baseline") return PipelineKind::Baseline;
  fail(ErrorCode::ConfigError, "unknown pipeline '" + std::string(s) + "' (expected unified or baseline)");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<EvalExample> parse_dataset(std::string_view jsonl, const std::string& source) {
  auto out = parse_jsonl<EvalExample>(jsonl, source, [](const Json& j) { return j.get<EvalExample>(); });
  reject_duplicate_ids(out, source);
  return out;
}

std::vector<EvalExample> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path), path.string());
}

std::vector<GoldRecord> gold_labels(const std::vector<EvalExample>& dataset) {
  std::vector<GoldRecord> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset) {
    auto vote = majority_vote(ex.annotations);
    if (auto* more = std::get_if<NeedsMoreAnnotations>(&vote)) {
      fail(ErrorCode::InvalidArgument,
           "example '" + ex.example_id + "' is unresolved: needs annotator " + std::to_string(more->stage));
    }
    out.push_back(GoldRecord{ex.example_id, std::get<GoldLabel>(vote)});
  }
  return out;
}

void score_questions(ExampleResult& r, const Embedder& embedder) {
  r.rouge_l.reset();
  r.similarity.reset();
  if (!r.predicted_ambiguous || !r.predicted_question || !r.gold.needs_clarification ||
      r.gold.gold_questions.empty()) {
    return;
  }
  const auto& q = *r.predicted_question;
  r.rouge_l = best_over_gold(r.gold.gold_questions, [&](const std::string& g) { return rouge_l(q, g).f1; });
  r.similarity =
      best_over_gold(r.gold.gold_questions, [&](const std::string& g) { return similarity(q, g, embedder); });
}

MetricsReport aggregate(const std::vector<ExampleResult>& results, std::string pipeline, std::string embedder) {
  if (results.empty()) fail(ErrorCode::Empty, "no examples to score");
  MetricsReport m;
  m.pipeline = std::move(pipeline);
  m.embedder = std::move(embedder);
  m.examples = results.size();
  std::vector<bool> preds, golds;
  double rouge_sum = 0.0, sim_sum = 0.0;
  for (const auto& r : results) {
    preds.push_back(r.predicted_ambiguous);
    golds.push_back(r.gold.needs_clarification);
    if (r.error) ++m.failures;
    m.llm_calls += r.llm_calls;
    if (r.rouge_l && r.similarity) {
      ++m.scored_questions;
      rouge_sum += *r.rouge_l;
      sim_sum += *r.similarity;
    }
  }
  m.binary = compute_prf(preds, golds);
  if (m.scored_questions > 0) {
    m.mean_rouge_l = rouge_sum / static_cast<double>(m.scored_questions);
    m.mean_similarity = sim_sum / static_cast<double>(m.scored_questions);
  }
  return m;
}

EvalRun evaluate(const std::vector<EvalExample>& dataset, const EvalConfig& config) {
  if (dataset.empty()) fail(ErrorCode::Empty, "dataset has no examples");
  if (!config.backend) fail(ErrorCode::InvalidArgument, "evaluation needs a backend");
  if (config.pipeline == PipelineKind::Unified && !config.registry) {
    fail(ErrorCode::InvalidArgument, "unified evaluation needs an agent registry");
  }
  const auto golds = gold_labels(dataset);
  HashedProjectionEmbedder fallback;
  const Embedder& embedder = config.embedder ? *config.embedder : fallback;

  std::vector<ExampleResult> results(dataset.size());
  auto run_one = [&](std::size_t i) {
    const auto& ex = dataset[i];
    ExampleResult r;
    r.example_id = ex.example_id;
    r.gold = golds[i].gold;
    try {
      const auto query = validate_query(ex.query, "eval:" + ex.example_id, Timestamp{});
      validate_history(ex.history);
      auto pc = config.pipeline_config;
      pc.trace_id = ex.example_id;
      auto outcome = config.pipeline == PipelineKind::Unified
                         ? disambiguate_unified(query, ex.history, *config.registry, config.store, *config.backend, pc)
                         : disambiguate_baseline(query, ex.history, *config.backend, config.fewshot, pc);
      r.predicted_ambiguous = outcome.result.decision.ambiguous();
      r.predicted_question = outcome.result.decision.clarification_question();
      r.llm_calls = outcome.result.llm_calls_used;
      r.warnings = std::move(outcome.warnings);
    } catch (const Error& e) {
      r.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    score_questions(r, embedder);
    results[i] = std::move(r);
  };

  const auto threads = std::clamp<std::size_t>(config.threads, 1, dataset.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (auto i = next.fetch_add(1); i < dataset.size(); i = next.fetch_add(1)) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  EvalRun run;
  run.report = aggregate(results, std::string(to_string(config.pipeline)), embedder.name());
  run.per_example = std::move(results);
  return run;
}

EvalRun score_predictions(const std::vector<PredictionRecord>& predictions, const std::vector<GoldRecord>& golds,
                          const Embedder& embedder) {
  reject_duplicate_ids(predictions, "predictions");
  reject_duplicate_ids(golds, "gold");
  if (predictions.size() != golds.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                        std::to_string(golds.size()) + " gold labels");
  }
  std::unordered_map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.example_id, &p);
  EvalRun run;
  for (const auto& g : golds) {
    auto it = by_id.find(g.example_id);
    if (it == by_id.end()) fail(ErrorCode::InvalidArgument, "no prediction for example '" + g.example_id + "'");
    ExampleResult r;
    r.example_id = g.example_id;
    r.gold = g.gold;
    r.predicted_ambiguous = it->second->ambiguous;
    r.predicted_question = it->second->clarification_question;
    score_questions(r, embedder);
    run.per_example.push_back(std::move(r));
  }
  run.report = aggregate(run.per_example, "predictions", embedder.name());
  return run;
}

std::vector<PredictionRecord> parse_predictions(std::string_view jsonl, const std::string& source) {
  return parse_jsonl<PredictionRecord>(jsonl, source, [](const Json& j) { return j.get<PredictionRecord>(); });
}

std::vector<GoldRecord> parse_golds(std::string_view jsonl, const std::string& source) {
  return parse_jsonl<GoldRecord>(jsonl, source, [](const Json& j) { return j.get<GoldRecord>(); });
}

void to_json(Json& j, const Annotation& v) {
  j = Json{{"needs_clarification", v.needs_clarification}, {"clarification_text", opt_json(v.clarification_text)}};
}

void from_json(const Json& j, Annotation& v) {
  v.needs_clarification = j.at("needs_clarification").get<bool>();
  v.clarification_text = opt_field<std::string>(j, "clarification_text");
  validate_annotation(v);
}

void to_json(Json& j, const EvalExample& v) {
  j = Json{{"example_id", v.example_id},
           {"query", v.query},
           {"history", v.history},
           {"rewritten", opt_json(v.rewritten)},
           {"annotations", v.annotations}};
}

void from_json(const Json& j, EvalExample& v) {
  v.example_id = j.at("example_id").get<std::string>();
  if (v.example_id.empty()) fail(ErrorCode::InvalidArgument, "example_id is empty");
  v.query = j.at("query").get<std::string>();
  v.history = opt_field<std::vector<ChatTurn>>(j, "history").value_or(std::vector<ChatTurn>{});
  v.rewritten = opt_field<std::string>(j, "rewritten");
  v.annotations = j.at("annotations").get<std::vector<Annotation>>();
  if (v.annotations.size() < 3 || v.annotations.size() > 5) {
    fail(ErrorCode::InvalidCount, "example '" + v.example_id + "' has " + std::to_string(v.annotations.size()) +
                                      " annotations (expected 3 to 5)");
  }
}

void to_json(Json& j, const GoldLabel& v) {
  j = Json{{"needs_clarification", v.needs_clarification}, {"gold_questions", v.gold_questions}};
}

void from_json(const Json& j, GoldLabel& v) {
  v.needs_clarification = j.at("needs_clarification").get<bool>();
  v.gold_questions = opt_field<std::vector<std::string>>(j, "gold_questions").value_or(std::vector<std::string>{});
  if (v.needs_clarification == v.gold_questions.empty()) {
    fail(ErrorCode::InvalidArgument, "gold_questions must be non-empty exactly when clarification is needed");
  }
}

void to_json(Json& j, const GoldRecord& v) {
  j = Json(v.gold);
  j["example_id"] = v.example_id;
}

void from_json(const Json& j, GoldRecord& v) {
  v.example_id = j.at("example_id").get<std::string>();
  v.gold = j.get<GoldLabel>();
}

void to_json(Json& j, const PredictionRecord& v) {
  j = Json{{"example_id", v.example_id},
           {"ambiguous", v.ambiguous},
           {"clarification_question", opt_json(v.clarification_question)}};
}

// Also accepts per-example output lines from `evaluate`.
void from_json(const Json& j, PredictionRecord& v) {
  v.example_id = j.at("example_id").get<std::string>();
  v.ambiguous = j.contains("ambiguous") ? j.at("ambiguous").get<bool>() : j.at("predicted_ambiguous").get<bool>();
  v.clarification_question = j.contains("clarification_question")
                                 ? opt_field<std::string>(j, "clarification_question")
                                 : opt_field<std::string>(j, "predicted_question");
  if (v.ambiguous != v.clarification_question.has_value()) {
    fail(ErrorCode::InvalidArgument, "prediction '" + v.example_id + "': ambiguous must come with a question");
  }
}

void to_json(Json& j, const ClassMetrics& v) {
  j = Json{{"precision", v.precision},
           {"recall", v.recall},
           {"f1", v.f1},
           {"precision_zero_division", v.precision_zero_division},
           {"recall_zero_division", v.recall_zero_division}};
}

void to_json(Json& j, const ConfusionCounts& v) {
  j = Json{{"tp", v.tp}, {"fp", v.fp}, {"fn", v.fn}, {"tn", v.tn}};
}

void to_json(Json& j, const BinaryMetrics& v) {
  j = Json{{"per_class", {{"clarification_needed", v.needed}, {"clarification_not_needed", v.not_needed}}},
           {"macro", {{"precision", v.macro.precision}, {"recall", v.macro.recall}, {"f1", v.macro.f1}}},
           {"counts", v.counts}};
}

void to_json(Json& j, const MetricsReport& v) {
  j = Json(v.binary);
  j["pipeline"] = v.pipeline;
  j["embedder"] = v.embedder;
  j["examples"] = v.examples;
  j["failures"] = v.failures;
  j["scored_questions"] = v.scored_questions;
  j["mean_rouge_l"] = v.mean_rouge_l;
  j["mean_similarity"] = v.mean_similarity;
  j["llm_calls"] = v.llm_calls;
}

void to_json(Json& j, const ExampleResult& v) {
  j = Json{{"example_id", v.example_id},
           {"gold_needs_clarification", v.gold.needs_clarification},
           {"gold_questions", v.gold.gold_questions},
           {"predicted_ambiguous", v.predicted_ambiguous},
           {"predicted_question", opt_json(v.predicted_question)},
           {"llm_calls", v.llm_calls},
           {"rouge_l", opt_json(v.rouge_l)},
           {"similarity", opt_json(v.similarity)},
           {"warnings", v.warnings},
           {"error", opt_json(v.error)}};
}

}  // namespace clarify::eval
