#include <algorithm>
#include <cmath>

#include "clarify/eval.hpp"
#include "clarify/text.hpp"

namespace clarify::eval {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.precision_zero_division = tp + fp == 0;
  m.recall_zero_division = tp + fn == 0;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = harmonic_mean(m.precision, m.recall);
  return m;
}

}  // namespace

double harmonic_mean(double p, double r) noexcept { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

BinaryMetrics compute_prf(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorCode::Empty, "no examples to score");
  BinaryMetrics m;
  m.counts = c;
  m.needed = class_metrics(c.tp, c.fp, c.fn);
  m.not_needed = class_metrics(c.tn, c.fn, c.fp);
  m.macro.precision = (m.needed.precision + m.not_needed.precision) / 2.0;
  m.macro.recall = (m.needed.recall + m.not_needed.recall) / 2.0;
  m.macro.f1 = (m.needed.f1 + m.not_needed.f1) / 2.0;
  return m;
}

BinaryMetrics compute_prf(const std::vector<bool>& predictions, const std::vector<bool>& golds) {
  if (predictions.size() != golds.size()) {
    fail(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                        std::to_string(golds.size()) + " gold labels");
  }
  if (predictions.empty()) fail(ErrorCode::Empty, "no examples to score");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i]) {
      ++(golds[i] ? c.tp : c.fp);
    } else {
      ++(golds[i] ? c.fn : c.tn);
    }
  }
  return compute_prf(c);
}

double round_half_up3(double x) noexcept {
  // Epsilon absorbs binary representation error such as 0.4375 * 1000.
  const double scaled = std::abs(x) * 1000.0;
  const double r = std::floor(scaled + 0.5 + 1e-9) / 1000.0;
  return x < 0 ? -r : r;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = text::words(candidate);
  const auto r = text::words(reference);
  if (c.empty() || r.empty()) return {};
  const auto lcs = lcs_length(c, r);
  RougeScore s;
  s.precision = ratio(lcs, c.size());
  s.recall = ratio(lcs, r.size());
  s.f1 = harmonic_mean(s.precision, s.recall);
  return s;
}

}  // namespace clarify::eval
