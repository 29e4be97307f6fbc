#include "clarify/eval.hpp"

namespace clarify::eval {

namespace {

std::size_t yes_count(const std::vector<Annotation>& a, std::size_t n) {
  std::size_t yes = 0;
  for (std::size_t i = 0; i < n; ++i) yes += a[i].needs_clarification ? 1 : 0;
  return yes;
}

GoldLabel decide(const std::vector<Annotation>& a, bool needs) {
  GoldLabel gold{needs, {}};
  if (!needs) return gold;
  for (const auto& x : a) {
    if (x.needs_clarification) gold.gold_questions.push_back(*x.clarification_text);
  }
  return gold;
}

void reject_extra(std::size_t decided_at, std::size_t n) {
  if (n > decided_at) {
    fail(ErrorCode::InvalidArgument, "vote was decided by annotator " + std::to_string(decided_at) + " but " +
                                         std::to_string(n) + " annotations were given");
  }
}

}  // namespace

void validate_annotation(const Annotation& a) {
  const bool has_text = a.clarification_text && !a.clarification_text->empty();
  if (a.needs_clarification != has_text) {
    fail(ErrorCode::InvalidArgument, a.needs_clarification ? "annotation needs clarification but has no text"
                                                           : "annotation has clarification text but needs none");
  }
}

VoteOutcome majority_vote(const std::vector<Annotation>& annotations) {
  const auto n = annotations.size();
  if (n < 3 || n > 5) {
    fail(ErrorCode::InvalidCount, "majority vote needs 3 to 5 annotations, got " + std::to_string(n));
  }
  for (const auto& a : annotations) validate_annotation(a);

  const auto y3 = yes_count(annotations, 3);
  if (y3 == 0 || y3 == 3) {
    reject_extra(3, n);
    return decide(annotations, y3 == 3);
  }
  if (n == 3) return NeedsMoreAnnotations{4};

  const auto y4 = yes_count(annotations, 4);
  if (y4 != 2) {
    reject_extra(4, n);
    return decide(annotations, y4 == 3);
  }
  if (n == 4) return NeedsMoreAnnotations{5};
  return decide(annotations, yes_count(annotations, 5) >= 3);
}

}  // namespace clarify::eval
