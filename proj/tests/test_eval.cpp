#include <doctest.h>

#include <fstream>
#include <random>

#include "clarify/eval.hpp"
#include "clarify/text.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace clarify;
using namespace clarify::eval;
using clarify::testing::data_path;
using clarify::testing::fixture_rules;
using clarify::testing::fixture_store;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

Annotation yes(std::string text = "Which one?") { return {true, std::move(text)}; }
Annotation no() { return {false, std::nullopt}; }

std::vector<Annotation> from_bits(unsigned bits, std::size_t n) {
  std::vector<Annotation> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back((bits >> i) & 1U ? yes("q" + std::to_string(i)) : no());
  return out;
}

Json expected_predictions() {
  std::ifstream in(data_path("fixtures/eval20_expected.json"));
  return Json::parse(in);
}

EvalRun run_fixture(PipelineKind kind, std::size_t threads, MockBackend& mock) {
  static const auto registry = make_default_registry();
  EvalConfig cfg;
  cfg.pipeline = kind;
  cfg.registry = &registry;
  cfg.store = fixture_store();
  cfg.backend = &mock;
  cfg.threads = threads;
  return evaluate(load_dataset(data_path("fixtures/eval20.jsonl")), cfg);
}

}  // namespace

// ------------------------------------------------------------------- voting

TEST_CASE("majority vote agrees with the prefix-stopping oracle on every pattern of 3 to 5 votes") {
  std::size_t decided = 0, more = 0, invalid = 0;
  for (std::size_t n = 3; n <= 5; ++n) {
    for (unsigned bits = 0; bits < (1U << n); ++bits) {
      const auto anns = from_bits(bits, n);
      std::vector<bool> votes;
      for (const auto& a : anns) votes.push_back(a.needs_clarification);
      const auto expected = oracle::staged_majority(votes);
      CAPTURE(n);
      CAPTURE(bits);
      switch (expected.kind) {
        case oracle::VoteVerdict::Kind::Decided: {
          ++decided;
          const auto out = majority_vote(anns);
          REQUIRE(std::holds_alternative<GoldLabel>(out));
          const auto& g = std::get<GoldLabel>(out);
          CHECK(g.needs_clarification == expected.needs);
          CHECK(g.gold_questions.empty() == !g.needs_clarification);
          std::size_t yes_count = 0;
          for (const auto& a : anns) yes_count += a.needs_clarification;
          if (g.needs_clarification) CHECK(g.gold_questions.size() == yes_count);
          break;
        }
        case oracle::VoteVerdict::Kind::NeedsMore: {
          ++more;
          const auto out = majority_vote(anns);
          REQUIRE(std::holds_alternative<NeedsMoreAnnotations>(out));
          CHECK(std::get<NeedsMoreAnnotations>(out).stage == expected.next_stage);
          break;
        }
        case oracle::VoteVerdict::Kind::Invalid:
          ++invalid;
          CHECK(code_of([&] { majority_vote(anns); }) == ErrorCode::InvalidArgument);
          break;
      }
    }
  }
  // Decided: 2 unanimous triples, 6 quads at 3-1, 12 quintuples after 2-2.
  CHECK(decided == 2 + 6 + 12);
  CHECK(more == 6 + 6);
  CHECK(invalid == 4 + 8 + 12);
}

TEST_CASE("vote counts outside three to five are rejected") {
  CHECK(code_of([] { majority_vote({}); }) == ErrorCode::InvalidCount);
  CHECK(code_of([] { majority_vote({yes(), yes()}); }) == ErrorCode::InvalidCount);
  CHECK(code_of([] { majority_vote(from_bits(0b111111, 6)); }) == ErrorCode::InvalidCount);
}

TEST_CASE("annotation consistency is validated") {
  CHECK(code_of([] { validate_annotation({true, std::nullopt}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { validate_annotation({false, std::string("text")}); }) == ErrorCode::InvalidArgument);
  CHECK_NOTHROW(validate_annotation(yes()));
  CHECK_NOTHROW(validate_annotation(no()));
}

TEST_CASE("gold questions come from the annotators who asked for clarification") {
  const auto out = majority_vote({yes("A?"), no(), yes("B?"), yes("C?")});
  const auto& g = std::get<GoldLabel>(out);
  CHECK(g.needs_clarification);
  CHECK(g.gold_questions == std::vector<std::string>{"A?", "B?", "C?"});
}

// ------------------------------------------------------------------ metrics

TEST_CASE("compute_prf matches textbook per-class definitions on random counts") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> d(0, 40);
  for (int i = 0; i < 500; ++i) {
    ConfusionCounts c{d(rng), d(rng), d(rng), d(rng)};
    if (c.total() == 0) continue;
    const auto m = compute_prf(c);
    const auto needed = oracle::prf(c.tp, c.fp, c.fn);
    const auto not_needed = oracle::prf(c.tn, c.fn, c.fp);
    CHECK(m.needed.precision == doctest::Approx(needed.p).epsilon(1e-12));
    CHECK(m.needed.recall == doctest::Approx(needed.r).epsilon(1e-12));
    CHECK(m.needed.f1 == doctest::Approx(needed.f1).epsilon(1e-12));
    CHECK(m.not_needed.precision == doctest::Approx(not_needed.p).epsilon(1e-12));
    CHECK(m.not_needed.recall == doctest::Approx(not_needed.r).epsilon(1e-12));
    CHECK(m.not_needed.f1 == doctest::Approx(not_needed.f1).epsilon(1e-12));
    CHECK(m.macro.f1 == doctest::Approx((needed.f1 + not_needed.f1) / 2).epsilon(1e-12));
    CHECK(m.counts == c);
  }
}

TEST_CASE("zero denominators score zero and raise the flags") {
  const auto m = compute_prf(ConfusionCounts{0, 0, 3, 2});
  CHECK(m.needed.precision == 0.0);
  CHECK(m.needed.precision_zero_division);
  CHECK_FALSE(m.needed.recall_zero_division);
  CHECK(m.needed.f1 == 0.0);
  const auto n = compute_prf(ConfusionCounts{0, 4, 0, 0});
  CHECK(n.needed.recall_zero_division);
  CHECK(n.not_needed.precision_zero_division);
  CHECK_FALSE(n.not_needed.recall_zero_division);
}

TEST_CASE("compute_prf from label vectors counts the confusion matrix") {
  const auto m = compute_prf({true, true, false, false, true}, {true, false, true, false, true});
  CHECK(m.counts == ConfusionCounts{2, 1, 1, 1});
  CHECK(code_of([] { compute_prf({true}, {true, false}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { compute_prf(std::vector<bool>{}, std::vector<bool>{}); }) == ErrorCode::Empty);
  CHECK(code_of([] { compute_prf(ConfusionCounts{}); }) == ErrorCode::Empty);
}

TEST_CASE("display rounding is half up at three decimals") {
  CHECK(round_half_up3(0.4375) == doctest::Approx(0.438));
  CHECK(round_half_up3(0.7317) == doctest::Approx(0.732));
  CHECK(round_half_up3(0.2605) == doctest::Approx(0.261));
  CHECK(round_half_up3(0.0) == 0.0);
  for (int k = 0; k <= 1000; ++k) CHECK(round_half_up3(k / 1000.0) == doctest::Approx(oracle::display3(k / 1000.0)));
}

// Brute force over all confusion matrices with at most 150 examples: which
// ones display exactly as the reported rows?
namespace {

struct Row {
  double p, r, f1;
};

bool displays(const oracle::Prf& x, const Row& row) {
  return oracle::display3(x.p) == doctest::Approx(row.p).epsilon(1e-9) &&
         oracle::display3(x.r) == doctest::Approx(row.r).epsilon(1e-9) &&
         oracle::display3(x.f1) == doctest::Approx(row.f1).epsilon(1e-9);
}

std::vector<ConfusionCounts> reproducing_counts(const Row& needed, const Row& not_needed, const Row& average) {
  std::vector<ConfusionCounts> out;
  const std::size_t cap = 150;
  for (std::size_t tp = 0; tp <= cap; ++tp) {
    for (std::size_t fp = 0; tp + fp <= cap; ++fp) {
      if (tp + fp == 0) continue;
      const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
      if (std::abs(p - needed.p) > 0.0006) continue;
      for (std::size_t fn = 0; tp + fp + fn <= cap; ++fn) {
        const auto a = oracle::prf(tp, fp, fn);
        if (!displays(a, needed)) continue;
        for (std::size_t tn = 0; tp + fp + fn + tn <= cap; ++tn) {
          const auto b = oracle::prf(tn, fn, fp);
          if (!displays(b, not_needed)) continue;
          const oracle::Prf avg{(a.p + b.p) / 2, (a.r + b.r) / 2, (a.f1 + b.f1) / 2};
          if (displays(avg, average)) out.push_back({tp, fp, fn, tn});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ConfusionCounts& a, const ConfusionCounts& b) {
    return a.total() < b.total();
  });
  return out;
}

bool all_multiples_of_first(const std::vector<ConfusionCounts>& hits) {
  const auto& b = hits.front();
  for (const auto& h : hits) {
    if (h.total() % b.total() != 0) return false;
    const auto k = h.total() / b.total();
    if (!(h == ConfusionCounts{b.tp * k, b.fp * k, b.fn * k, b.tn * k})) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("reported unified-pipeline rows are reproduced only by one confusion matrix and its multiples") {
  const auto hits = reproducing_counts({0.904, 0.635, 0.746}, {0.438, 0.808, 0.568}, {0.671, 0.721, 0.657});
  REQUIRE_FALSE(hits.empty());
  CHECK(hits[0] == ConfusionCounts{47, 5, 27, 21});
  CHECK(all_multiples_of_first(hits));
  const auto m = compute_prf(hits[0]);
  CHECK(round_half_up3(m.macro.f1) == doctest::Approx(0.657));
  CHECK(round_half_up3(m.not_needed.precision) == doctest::Approx(0.438));
}

TEST_CASE("reported baseline rows are reproduced only by one confusion matrix and its multiples") {
  const auto hits = reproducing_counts({0.732, 0.833, 0.779}, {0.333, 0.214, 0.261}, {0.533, 0.524, 0.520});
  REQUIRE_FALSE(hits.empty());
  CHECK(hits[0] == ConfusionCounts{30, 11, 6, 3});
  CHECK(all_multiples_of_first(hits));
  const auto m = compute_prf(hits[0]);
  CHECK(round_half_up3(m.macro.precision) == doctest::Approx(0.533));
  CHECK(round_half_up3(m.macro.recall) == doctest::Approx(0.524));
  CHECK(round_half_up3(m.macro.f1) == doctest::Approx(0.520));
}

TEST_CASE("average-row F1 is the mean of class F1s, not the harmonic mean of the average row") {
  const auto m = compute_prf(ConfusionCounts{47, 5, 27, 21});
  CHECK(round_half_up3(harmonic_mean(m.macro.precision, m.macro.recall)) != doctest::Approx(0.657));
  CHECK(round_half_up3(m.macro.f1) == doctest::Approx(0.657));
}

// -------------------------------------------------------------- ROUGE-L

TEST_CASE("ROUGE-L on a hand-computed pair") {
  const auto s = rouge_l("Which dataset do you mean", "which orders dataset are you using");
  CHECK(s.precision == doctest::Approx(3.0 / 5.0));
  CHECK(s.recall == doctest::Approx(3.0 / 6.0));
  CHECK(s.f1 == doctest::Approx(6.0 / 11.0));
  const auto same = rouge_l("a b c", "a b c");
  CHECK(same.f1 == doctest::Approx(1.0));
  CHECK(rouge_l("", "a").f1 == 0.0);
  CHECK(rouge_l("a", "  ").f1 == 0.0);
  CHECK(rouge_l("x y", "a b").f1 == 0.0);
}

TEST_CASE("LCS agrees with subsequence enumeration on random short sequences") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> len(0, 9), sym(0, 3);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> a(len(rng)), b(len(rng));
    for (auto& x : a) x = std::string(1, static_cast<char>('a' + sym(rng)));
    for (auto& x : b) x = std::string(1, static_cast<char>('a' + sym(rng)));
    CHECK(lcs_length(a, b) == oracle::lcs_by_enumeration(a, b));
    CHECK(lcs_length(a, b) == lcs_length(b, a));
  }
}

// ---------------------------------------------------------- similarity

TEST_CASE("similarity of a text with itself is one") {
  const HashedProjectionEmbedder hashed;
  for (const auto* s : {"Which dataset do you mean?", "segment or dataset", "x"}) {
    CHECK(similarity(s, s, hashed) == doctest::Approx(1.0));
  }
  CHECK(similarity("", "abc", hashed) == 0.0);
}

TEST_CASE("one-hot embeddings score disjoint vocabularies at zero") {
  const OneHotHashEmbedder onehot;
  const std::vector<std::string> left{"alpha", "beta"}, right{"gamma", "delta"};
  for (const auto& l : left) {
    for (const auto& r : right) REQUIRE(onehot.bucket(l) != onehot.bucket(r));
  }
  CHECK(similarity("alpha beta", "gamma delta", onehot) == doctest::Approx(0.0));
  CHECK(similarity("alpha beta", "beta gamma", onehot) == doctest::Approx(0.5));
}

TEST_CASE("similarity matches exhaustive assignment over a fixed embedding table") {
  const std::unordered_map<std::string, Vector> table{
      {"which", {1, 0, 0}}, {"dataset", {0.6, 0.8, 0}}, {"segment", {0, 0.6, 0.8}}, {"mean", {0.3, 0.3, 0.9}}};
  const TableEmbedder embed(table);
  const std::vector<std::string> cand{"which", "dataset", "mean"}, ref{"segment", "which"};
  std::vector<Vector> cv, rv;
  for (const auto& t : cand) cv.push_back(table.at(t));
  for (const auto& t : ref) rv.push_back(table.at(t));
  CHECK(similarity("which dataset mean", "segment which", embed) ==
        doctest::Approx(oracle::similarity_f1(cv, rv)).epsilon(1e-12));
  CHECK(code_of([&] { similarity("unknown", "which", embed); }) == ErrorCode::EmbedderUnavailable);
}

TEST_CASE("hashed embeddings are deterministic unit vectors") {
  const HashedProjectionEmbedder a, b;
  const auto va = a.embed({"dataset", "segment"});
  const auto vb = b.embed({"dataset", "segment"});
  CHECK(va == vb);
  double norm = 0;
  for (double x : va[0]) norm += x * x;
  CHECK(norm == doctest::Approx(1.0));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(code_of([] { HashedProjectionEmbedder bad(0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { cosine({1, 0}, {1}); }) == ErrorCode::LengthMismatch);
}

// ------------------------------------------------------------ evaluation

TEST_CASE("unified evaluation on the twenty-example fixture matches the expected predictions") {
  MockBackend mock(fixture_rules());
  const auto run = run_fixture(PipelineKind::Unified, 1, mock);
  const auto expected = expected_predictions()["unified"];
  REQUIRE(run.per_example.size() == 20);
  for (const auto& r : run.per_example) {
    CAPTURE(r.example_id);
    CHECK(r.predicted_ambiguous == expected.at(r.example_id).get<bool>());
    CHECK(r.llm_calls == 1);
    CHECK_FALSE(r.error);
  }
  CHECK(run.report.binary.counts == ConfusionCounts{9, 3, 2, 6});
  CHECK(run.report.llm_calls == 20);
  CHECK(run.report.scored_questions == 9);
  CHECK(run.report.binary.macro.f1 == doctest::Approx(compute_prf(ConfusionCounts{9, 3, 2, 6}).macro.f1));
  CHECK(run.report.mean_rouge_l > 0.0);
  CHECK(run.report.mean_similarity > 0.0);
  CHECK(run.report.pipeline == "unified");
}

TEST_CASE("baseline evaluation on the fixture matches the expected predictions and costs more calls") {
  MockBackend mock(fixture_rules());
  const auto run = run_fixture(PipelineKind::Baseline, 1, mock);
  const auto expected = expected_predictions()["baseline"];
  for (const auto& r : run.per_example) {
    CAPTURE(r.example_id);
    CHECK(r.predicted_ambiguous == expected.at(r.example_id).get<bool>());
    CHECK(r.llm_calls >= 2);
  }
  CHECK(run.report.binary.counts == ConfusionCounts{3, 1, 8, 8});
  CHECK(run.report.llm_calls == 44);
}

TEST_CASE("parallel evaluation produces byte-identical reports") {
  MockBackend a(fixture_rules()), b(fixture_rules());
  const auto seq = run_fixture(PipelineKind::Unified, 1, a);
  const auto par = run_fixture(PipelineKind::Unified, 6, b);
  CHECK(Json(seq.report).dump() == Json(par.report).dump());
  CHECK(Json(seq.per_example).dump() == Json(par.per_example).dump());
}

TEST_CASE("pipeline failures are recorded and scored as not ambiguous") {
  CallbackBackend down([](const CompletionRequest&) -> std::string { fail(ErrorCode::BackendUnavailable, "down"); });
  const auto registry = make_default_registry();
  EvalConfig cfg;
  cfg.registry = &registry;
  cfg.store = fixture_store();
  cfg.backend = &down;
  const auto run = evaluate(load_dataset(data_path("fixtures/eval20.jsonl")), cfg);
  for (const auto& r : run.per_example) CHECK_FALSE(r.predicted_ambiguous);
  CHECK(run.report.binary.counts.tp == 0);
  CHECK(run.report.binary.counts.fp == 0);
}

TEST_CASE("an always-no predictor scores zero on the needed class") {
  std::vector<PredictionRecord> preds;
  const auto golds = gold_labels(load_dataset(data_path("fixtures/eval20.jsonl")));
  for (const auto& g : golds) preds.push_back({g.example_id, false, std::nullopt});
  const auto run = score_predictions(preds, golds, HashedProjectionEmbedder());
  CHECK(run.report.binary.needed.precision_zero_division);
  CHECK(run.report.binary.needed.f1 == 0.0);
  CHECK(run.report.binary.needed.recall == 0.0);
  CHECK(run.report.scored_questions == 0);
}

TEST_CASE("evaluation preconditions") {
  EvalConfig cfg;
  CHECK(code_of([&] { evaluate({}, cfg); }) == ErrorCode::Empty);
  const auto data = load_dataset(data_path("fixtures/eval20.jsonl"));
  CHECK(code_of([&] { evaluate(data, cfg); }) == ErrorCode::InvalidArgument);
  MockBackend mock;
  cfg.backend = &mock;
  CHECK(code_of([&] { evaluate(data, cfg); }) == ErrorCode::InvalidArgument);
  CHECK(parse_pipeline_kind("baseline") == PipelineKind::Baseline);
  CHECK(code_of([] { parse_pipeline_kind("other"); }) == ErrorCode::ConfigError);
}

TEST_CASE("dataset parsing reports the line and rejects bad examples") {
  const std::string good =
      R"({"example_id":"a","query":"q","annotations":[{"needs_clarification":false},{"needs_clarification":false},{"needs_clarification":false}]})";
  CHECK(parse_dataset(good + "\n\n").size() == 1);
  try {
    parse_dataset(good + "\n{oops\n", "data.jsonl");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("data.jsonl:2") != std::string::npos);
  }
  CHECK(code_of([&] { parse_dataset(good + "\n" + good); }) == ErrorCode::DuplicateKey);
  CHECK(code_of([] {
    parse_dataset(R"({"example_id":"a","query":"q","annotations":[{"needs_clarification":false}]})");
  }) == ErrorCode::ParseError);
  CHECK(code_of([] { load_dataset("/nonexistent.jsonl"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("unresolved votes block gold labelling") {
  CHECK(code_of([] { gold_labels(load_dataset(data_path("fixtures/eval_unresolved.jsonl"))); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("scoring stored predictions joins by id") {
  const std::vector<GoldRecord> golds{{"a", {true, {"Which dataset do you mean"}}}, {"b", {false, {}}}};
  const std::vector<PredictionRecord> preds{{"b", false, std::nullopt}, {"a", true, "Which dataset do you mean"}};
  const auto run = score_predictions(preds, golds, HashedProjectionEmbedder());
  CHECK(run.report.binary.counts == ConfusionCounts{1, 0, 0, 1});
  CHECK(run.report.scored_questions == 1);
  CHECK(run.report.mean_rouge_l == doctest::Approx(1.0));
  CHECK(run.per_example[0].example_id == "a");

  CHECK(code_of([&] { score_predictions({preds[0]}, golds, HashedProjectionEmbedder()); }) ==
        ErrorCode::LengthMismatch);
  const std::vector<PredictionRecord> wrong{{"b", false, std::nullopt}, {"c", false, std::nullopt}};
  CHECK(code_of([&] { score_predictions(wrong, golds, HashedProjectionEmbedder()); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_predictions(R"({"example_id":"a","ambiguous":true})"); }) != ErrorCode::Empty);
}

TEST_CASE("question scores take the best gold question") {
  ExampleResult r;
  r.gold = {true, {"completely different words", "which dataset do you mean"}};
  r.predicted_ambiguous = true;
  r.predicted_question = "which dataset do you mean";
  score_questions(r, HashedProjectionEmbedder());
  REQUIRE(r.rouge_l);
  CHECK(*r.rouge_l == doctest::Approx(1.0));
  CHECK(*r.similarity == doctest::Approx(1.0));

  ExampleResult none;
  none.gold = {false, {}};
  none.predicted_ambiguous = true;
  none.predicted_question = "x";
  score_questions(none, HashedProjectionEmbedder());
  CHECK_FALSE(none.rouge_l);
}
