#include <algorithm>

#include "clarify/agents.hpp"

namespace clarify {

std::vector<ProductHit> match_products(const KnowledgeStore& store, std::string_view query_text) {
  const auto tokens = text::tokenize(query_text);
  std::vector<ProductHit> hits;
  const auto& products = store.products();
  for (std::size_t p = 0; p < products.size(); ++p) {
    const auto& keywords = products[p].keywords;
    ProductHit hit{p, 0, {}};
    bool first = true;
    for (const auto& kw : keywords) {
      auto it = std::find_if(tokens.begin(), tokens.end(), [&](const text::Token& t) { return t.text == kw; });
      if (it == tokens.end()) continue;
      ++hit.keyword_hits;
      const ByteSpan span{it->start, it->end};
      if (first || span < hit.first_span) hit.first_span = span;
      first = false;
    }
    if (hit.keyword_hits > 0) hits.push_back(hit);
  }
  return hits;
}

std::optional<std::size_t> best_guess_product(const std::vector<ProductHit>& hits) {
  std::optional<std::size_t> best;
  std::size_t best_hits = 0;
  bool tied = false;
  for (const auto& h : hits) {
    if (h.keyword_hits > best_hits) {
      best = h.product_index;
      best_hits = h.keyword_hits;
      tied = false;
    } else if (h.keyword_hits == best_hits) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return best;
}

ProductAmbiguityAgent::ProductAmbiguityAgent(AgentDescriptor descriptor) : Agent(std::move(descriptor)) {}

AgentReport ProductAmbiguityAgent::detect(const AgentContext& ctx) const {
  const auto& store = *ctx.knowledge;
  const auto hits = match_products(store, ctx.query.text);
  if (hits.size() < 2) return nothing_found();

  std::vector<MatchCandidate> matches;
  std::vector<std::string> names;
  for (const auto& h : hits) {
    const auto& p = store.products()[h.product_index];
    matches.push_back(MatchCandidate{h.first_span, p.display_name, "product", p.product_id});
    names.push_back(p.display_name);
  }
  std::string detail = "The query could concern " + std::to_string(hits.size()) + " products: " + text::join(names, ", ");
  return AgentReport(id(), descriptor().description, true, std::nullopt, std::move(detail), std::move(matches), {});
}

}  // namespace clarify
