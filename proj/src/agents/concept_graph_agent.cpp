#include <algorithm>
#include <unordered_map>

#include "clarify/agents.hpp"

namespace clarify {

std::vector<ConceptHit> find_concepts(const KnowledgeStore& store, std::string_view query_text) {
  const auto& concepts = store.concepts();
  if (concepts.empty()) return {};

  // Terms compared as space-joined token sequences so punctuation and
  // spacing differences do not matter.
  std::unordered_map<std::string, std::string> by_tokens;
  for (const auto& [term, def] : concepts) by_tokens.emplace(text::join(text::words(term), " "), term);

  struct Occurrence {
    std::size_t first_token, token_count;
    ByteSpan span;
    const std::string* term;
  };
  const auto tokens = text::tokenize(query_text);
  const std::size_t max_len = store.max_concept_term_tokens();
  std::vector<Occurrence> occ;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string key;
    for (std::size_t j = i; j < tokens.size() && j - i < max_len; ++j) {
      if (j > i) key += ' ';
      key += tokens[j].text;
      if (auto it = by_tokens.find(key); it != by_tokens.end()) {
        occ.push_back({i, j - i + 1, ByteSpan{tokens[i].start, tokens[j].end}, &it->second});
      }
    }
  }

  std::stable_sort(occ.begin(), occ.end(), [](const Occurrence& a, const Occurrence& b) {
    if (a.token_count != b.token_count) return a.token_count > b.token_count;
    return a.first_token < b.first_token;
  });
  std::vector<bool> taken(tokens.size(), false);
  std::vector<ConceptHit> chosen;
  for (const auto& o : occ) {
    const auto first = taken.begin() + static_cast<std::ptrdiff_t>(o.first_token);
    const auto last = first + static_cast<std::ptrdiff_t>(o.token_count);
    if (std::any_of(first, last, [](bool t) { return t; })) continue;
    std::fill(first, last, true);
    chosen.push_back(ConceptHit{o.span, *o.term});
  }
  std::sort(chosen.begin(), chosen.end(), [](const ConceptHit& a, const ConceptHit& b) { return a.span < b.span; });
  return chosen;
}

ConceptGraphAgent::ConceptGraphAgent(AgentDescriptor descriptor) : Agent(std::move(descriptor)) {}

AgentReport ConceptGraphAgent::detect(const AgentContext& ctx) const {
  const auto& store = *ctx.knowledge;
  std::vector<ConceptDefinition> grounding;
  std::vector<std::string> terms;
  for (const auto& hit : find_concepts(store, ctx.query.text)) {
    if (std::find(terms.begin(), terms.end(), hit.term) != terms.end()) continue;
    terms.push_back(hit.term);
    grounding.push_back(store.concepts().at(hit.term));
  }
  std::string detail = terms.empty() ? std::string() : "Domain terms found: " + text::join(terms, ", ");
  return nothing_found(std::move(grounding), std::move(detail));
}

}  // namespace clarify
