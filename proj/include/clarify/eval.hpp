#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "clarify/agents.hpp"
#include "clarify/codec.hpp"
#include "clarify/domain.hpp"
#include "clarify/llm_backend.hpp"
#include "clarify/orchestrator.hpp"

namespace clarify::eval {

// ---------------------------------------------------------------- annotation

/// needs_clarification == false exactly when clarification_text is absent.
struct Annotation {
  bool needs_clarification = false;
  std::optional<std::string> clarification_text;

  bool operator==(const Annotation&) const = default;
};

void validate_annotation(const Annotation& a);

struct EvalExample {
  std::string example_id;
  std::string query;
  std::vector<ChatTurn> history;
  std::optional<std::string> rewritten;
  std::vector<Annotation> annotations;  // annotator stage order, 3 to 5 entries

  bool operator==(const EvalExample&) const = default;
};

/// gold_questions is non-empty exactly when needs_clarification.
struct GoldLabel {
  bool needs_clarification = false;
  std::vector<std::string> gold_questions;

  bool operator==(const GoldLabel&) const = default;
};

/// Another annotator is required; `stage` is the 1-based annotator number.
struct NeedsMoreAnnotations {
  std::size_t stage = 0;

  bool operator==(const NeedsMoreAnnotations&) const = default;
};

using VoteOutcome = std::variant<GoldLabel, NeedsMoreAnnotations>;

/// Staged vote. Three annotations: unanimous decides, 2-1 asks for a fourth.
/// Four (first three split 2-1): 3-1 decides, 2-2 asks for a fifth. Five
/// (first four split 2-2): the 3-2 majority decides. Counts outside 3..5 are
/// InvalidCount; annotations past a decided stage are InvalidArgument.
VoteOutcome majority_vote(const std::vector<Annotation>& annotations);

// ------------------------------------------------------------------- metrics

struct ConfusionCounts {
  std::size_t tp = 0;  // predicted needed, gold needed
  std::size_t fp = 0;  // predicted needed, gold not needed
  std::size_t fn = 0;  // predicted not needed, gold needed
  std::size_t tn = 0;  // predicted not needed, gold not needed

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_zero_division = false;  // no predicted positives
  bool recall_zero_division = false;     // no gold positives

  bool operator==(const ClassMetrics&) const = default;
};

struct BinaryMetrics {
  ClassMetrics needed;      // positive class: clarification needed
  ClassMetrics not_needed;  // positive class: clarification not needed
  ClassMetrics macro;       // unweighted mean of the two classes, unrounded
  ConfusionCounts counts;

  bool operator==(const BinaryMetrics&) const = default;
};

double harmonic_mean(double p, double r) noexcept;

BinaryMetrics compute_prf(const ConfusionCounts& counts);
/// Throws LengthMismatch for unequal lengths and Empty for no examples.
BinaryMetrics compute_prf(const std::vector<bool>& predictions, const std::vector<bool>& golds);

/// Rounds half away from zero to three decimals (0.4375 -> 0.438).
double round_half_up3(double x) noexcept;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);
/// Token-level ROUGE-L; any empty side scores all zeros.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

// ----------------------------------------------------------------- embedders

using Vector = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per token, in order. Throws EmbedderUnavailable on failure.
  virtual std::vector<Vector> embed(const std::vector<std::string>& tokens) const = 0;
  virtual std::string name() const = 0;
};

/// Seeded pseudo-random unit vectors keyed by an FNV-1a hash of the token.
/// Bit-for-bit reproducible across platforms.
class HashedProjectionEmbedder final : public Embedder {
 public:
  explicit HashedProjectionEmbedder(std::size_t dim = 256, std::uint64_t seed = 0x5eedULL);
  std::vector<Vector> embed(const std::vector<std::string>& tokens) const override;
  std::string name() const override { return "hashed-projection"; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Each token maps to a basis vector chosen by hash, so distinct tokens are
/// orthogonal unless their hashes collide modulo `dim`.
class OneHotHashEmbedder final : public Embedder {
 public:
  explicit OneHotHashEmbedder(std::size_t dim = 4096);
  std::vector<Vector> embed(const std::vector<std::string>& tokens) const override;
  std::string name() const override { return "one-hot-hash"; }
  std::size_t bucket(const std::string& token) const;

 private:
  std::size_t dim_;
};

/// Fixed token -> vector table; unknown tokens are EmbedderUnavailable.
class TableEmbedder final : public Embedder {
 public:
  explicit TableEmbedder(std::unordered_map<std::string, Vector> table);
  std::vector<Vector> embed(const std::vector<std::string>& tokens) const override;
  std::string name() const override { return "table"; }

 private:
  std::unordered_map<std::string, Vector> table_;
};

std::uint64_t fnv1a64(std::string_view s) noexcept;
double cosine(const Vector& a, const Vector& b);

struct SimilarityScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Greedy matching: every candidate token takes its best reference token by
/// cosine and vice versa. Empty sides score zero. f1 is clamped to [-1, 1].
SimilarityScore similarity_detail(std::string_view candidate, std::string_view reference, const Embedder& embedder);
double similarity(std::string_view candidate, std::string_view reference, const Embedder& embedder);

// --------------------------------------------------------------- evaluation

enum class PipelineKind { Unified, Baseline };
std::string_view to_string(PipelineKind k) noexcept;
PipelineKind parse_pipeline_kind(std::string_view s);

struct GoldRecord {
  std::string example_id;
  GoldLabel gold;
};

struct PredictionRecord {
  std::string example_id;
  bool ambiguous = false;
  std::optional<std::string> clarification_question;
};

struct ExampleResult {
  std::string example_id;
  GoldLabel gold;
  bool predicted_ambiguous = false;
  std::optional<std::string> predicted_question;
  std::size_t llm_calls = 0;
  std::optional<double> rouge_l;     // best F1 over gold questions
  std::optional<double> similarity;  // best F1 over gold questions
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // pipeline failure, scored as not ambiguous
};

struct MetricsReport {
  std::string pipeline;
  std::string embedder;
  std::size_t examples = 0;
  std::size_t failures = 0;
  std::size_t scored_questions = 0;  // both sides ask a question
  BinaryMetrics binary;
  double mean_rouge_l = 0.0;
  double mean_similarity = 0.0;
  std::size_t llm_calls = 0;
};

struct EvalConfig {
  PipelineKind pipeline = PipelineKind::Unified;
  PipelineConfig pipeline_config;
  const AgentRegistry* registry = nullptr;  // unified only
  StoreSnapshot store;
  LlmBackend* backend = nullptr;
  const Embedder* embedder = nullptr;  // defaults to HashedProjectionEmbedder
  std::vector<FewShotExample> fewshot = default_fewshot_examples();
  std::size_t threads = 1;
};

struct EvalRun {
  MetricsReport report;
  std::vector<ExampleResult> per_example;  // dataset order
};

std::vector<EvalExample> parse_dataset(std::string_view jsonl, const std::string& source = "dataset");
std::vector<EvalExample> load_dataset(const std::filesystem::path& path);

/// Resolves every example's gold label; unresolved votes are InvalidArgument.
std::vector<GoldRecord> gold_labels(const std::vector<EvalExample>& dataset);

/// Scores a prediction against its gold label. Question metrics are only
/// filled when both sides ask a question.
void score_questions(ExampleResult& r, const Embedder& embedder);

MetricsReport aggregate(const std::vector<ExampleResult>& results, std::string pipeline, std::string embedder);

/// Runs the pipeline on every example (in parallel when threads > 1) and
/// scores it. Aggregation is independent of scheduling order.
EvalRun evaluate(const std::vector<EvalExample>& dataset, const EvalConfig& config);

/// Joins predictions with gold labels by example id. Missing or duplicate ids
/// on either side are InvalidArgument.
EvalRun score_predictions(const std::vector<PredictionRecord>& predictions, const std::vector<GoldRecord>& golds,
                          const Embedder& embedder);

std::vector<PredictionRecord> parse_predictions(std::string_view jsonl, const std::string& source = "predictions");
std::vector<GoldRecord> parse_golds(std::string_view jsonl, const std::string& source = "gold");
std::string read_text_file(const std::filesystem::path& path);

void to_json(Json& j, const Annotation& v);
void from_json(const Json& j, Annotation& v);
void to_json(Json& j, const EvalExample& v);
void from_json(const Json& j, EvalExample& v);
void to_json(Json& j, const GoldLabel& v);
void from_json(const Json& j, GoldLabel& v);
void to_json(Json& j, const GoldRecord& v);
void from_json(const Json& j, GoldRecord& v);
void to_json(Json& j, const PredictionRecord& v);
void from_json(const Json& j, PredictionRecord& v);
void to_json(Json& j, const ClassMetrics& v);
void to_json(Json& j, const ConfusionCounts& v);
void to_json(Json& j, const BinaryMetrics& v);
void to_json(Json& j, const MetricsReport& v);
void to_json(Json& j, const ExampleResult& v);

}  // namespace clarify::eval
