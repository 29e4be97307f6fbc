#include <algorithm>
#include <set>

#include "clarify/agents.hpp"

namespace clarify {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t'; }

// Kind named by a "(kind)" qualifier directly after `end`, if any.
std::optional<std::string> qualifier_after(std::string_view s, std::size_t end) {
  std::size_t i = end;
  while (i < s.size() && is_space(s[i])) ++i;
  if (i >= s.size() || s[i] != '(') return std::nullopt;
  const auto close = s.find(')', i + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return text::to_lower(text::trim(s.substr(i + 1, close - i - 1)));
}

}  // namespace

double normalized_edit_distance(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[b.size()]) / static_cast<double>(longest);
}

std::string entity_label(const Entity& e) { return e.name + " (" + e.kind + ")"; }

std::string format_link_line(std::string_view span_text, const std::vector<std::string>& labels) {
  return std::string(span_text) + " can be linked to " + text::join(labels, ", ");
}

std::vector<SpanLinks> link_spans(const KnowledgeStore& store, std::string_view query_text,
                                  const EntityLinkingOptions& options) {
  std::vector<SpanLinks> out;
  const auto tokens = text::tokenize(query_text);
  const std::size_t max_len = store.max_entity_name_tokens();
  if (max_len == 0) return out;

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = i; j < tokens.size() && j - i < max_len; ++j) {
      const ByteSpan span{tokens[i].start, tokens[j].end};
      const auto surface = query_text.substr(span.start, span.length());

      std::vector<Entity> linked;
      if (options.fuzzy) {
        const auto folded = text::to_lower(surface);
        for (const auto& e : store.entities()) {
          if (normalized_edit_distance(folded, text::to_lower(e.name)) <= options.fuzzy_max_distance) {
            linked.push_back(e);
          }
        }
        std::sort(linked.begin(), linked.end(), [](const Entity& a, const Entity& b) {
          return std::tie(a.kind, a.ref_id) < std::tie(b.kind, b.ref_id);
        });
      } else {
        linked = store.lookup_name(surface);
      }
      if (linked.empty()) continue;

      if (auto kind = qualifier_after(query_text, span.end)) {
        std::vector<Entity> narrowed;
        std::copy_if(linked.begin(), linked.end(), std::back_inserter(narrowed),
                     [&](const Entity& e) { return text::to_lower(e.kind) == *kind; });
        if (!narrowed.empty()) linked = std::move(narrowed);
      }
      out.push_back(SpanLinks{span, std::move(linked)});
    }
  }
  return out;
}

EntityLinkingAgent::EntityLinkingAgent(AgentDescriptor descriptor, EntityLinkingOptions options)
    : Agent(std::move(descriptor)), options_(options) {}

AgentReport EntityLinkingAgent::detect(const AgentContext& ctx) const {
  const auto& q = ctx.query.text;
  const auto links = link_spans(*ctx.knowledge, q, options_);

  // Only maximal spans count: a span inside a longer linked span is part of
  // that longer mention.
  auto contained_in_other = [&](const SpanLinks& s) {
    return std::any_of(links.begin(), links.end(), [&](const SpanLinks& o) {
      return o.span != s.span && o.span.start <= s.span.start && s.span.end <= o.span.end;
    });
  };

  for (const auto& link : links) {
    if (link.entities.size() < 2 || contained_in_other(link)) continue;
    const auto surface = q.substr(link.span.start, link.span.length());
    std::vector<MatchCandidate> matches;
    std::vector<std::string> labels;
    for (const auto& e : link.entities) {
      auto label = entity_label(e);
      matches.push_back(MatchCandidate{link.span, label, e.kind, e.ref_id});
      labels.push_back(std::move(label));
    }
    return AgentReport(id(), descriptor().description, true, std::nullopt, format_link_line(surface, labels),
                       std::move(matches), {});
  }
  return nothing_found();
}

}  // namespace clarify
