#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clarify/domain.hpp"
#include "clarify/knowledge_store.hpp"
#include "clarify/text.hpp"

namespace clarify {

namespace agent_ids {
inline constexpr std::string_view kGeneric = "generic_ambiguity";
inline constexpr std::string_view kProduct = "product_ambiguity";
inline constexpr std::string_view kEntityLinking = "entity_linking";
inline constexpr std::string_view kConceptGraph = "concept_graph";
}  // namespace agent_ids

inline constexpr std::chrono::milliseconds kDefaultAgentTimeout{2000};

struct AgentDescriptor {
  std::string agent_id;
  std::string description;  // injected verbatim into prompts
  bool enabled = true;
  std::chrono::milliseconds timeout = kDefaultAgentTimeout;
};

/// Everything an agent may look at. Shared read-only between concurrent agents.
struct AgentContext {
  Query query;
  std::vector<ChatTurn> history;
  StoreSnapshot knowledge;
};

/// A pluggable ambiguity detector. Implementations must be safe to call
/// concurrently and deterministic for a fixed context and store snapshot.
class Agent {
 public:
  explicit Agent(AgentDescriptor descriptor);
  virtual ~Agent() = default;

  const AgentDescriptor& descriptor() const noexcept { return descriptor_; }
  const std::string& id() const noexcept { return descriptor_.agent_id; }

  virtual AgentReport detect(const AgentContext& ctx) const = 0;

 protected:
  AgentReport nothing_found(std::vector<ConceptDefinition> grounding = {}, std::string detail = {}) const;

 private:
  AgentDescriptor descriptor_;
};

using AgentPtr = std::shared_ptr<const Agent>;

/// Ordered set of agents; registration order is the order reports come back in.
class AgentRegistry {
 public:
  /// Throws DuplicateKey if the id is already registered.
  void add(AgentPtr agent);

  const std::vector<AgentPtr>& agents() const noexcept { return agents_; }
  std::vector<AgentPtr> enabled() const;
  const Agent* find(std::string_view agent_id) const;
  bool empty() const noexcept { return agents_.empty(); }

 private:
  std::vector<AgentPtr> agents_;
};

// --- generic sentence-level detector -------------------------------------

struct GenericAgentOptions {
  std::vector<std::string> reference_words{"this", "that", "it", "these"};
  std::vector<std::string> scope_phrases{"over time", "recently", "recent", "lately", "latest"};
  std::size_t history_window = 4;
};

class GenericAmbiguityAgent final : public Agent {
 public:
  GenericAmbiguityAgent(AgentDescriptor descriptor, GenericAgentOptions options = {});
  AgentReport detect(const AgentContext& ctx) const override;

 private:
  GenericAgentOptions options_;
  std::vector<std::vector<std::string>> scope_phrases_;  // tokenized
};

// --- product detector -----------------------------------------------------

struct ProductHit {
  std::size_t product_index = 0;  // into KnowledgeStore::products()
  std::size_t keyword_hits = 0;   // distinct keywords present in the query
  ByteSpan first_span;            // first query token that matched
};

/// Products sharing at least one keyword with the query tokens, in catalog order.
std::vector<ProductHit> match_products(const KnowledgeStore& store, std::string_view query_text);

/// The product with strictly the most keyword hits, if unique.
std::optional<std::size_t> best_guess_product(const std::vector<ProductHit>& hits);

class ProductAmbiguityAgent final : public Agent {
 public:
  explicit ProductAmbiguityAgent(AgentDescriptor descriptor);
  AgentReport detect(const AgentContext& ctx) const override;
};

// --- entity linking -------------------------------------------------------

struct EntityLinkingOptions {
  bool fuzzy = false;
  double fuzzy_max_distance = 0.2;  // normalized edit distance
};

struct SpanLinks {
  ByteSpan span;
  std::vector<Entity> entities;  // distinct, ordered by (kind, ref_id)
};

/// Every token-aligned span of `query_text` that links to at least one
/// entity, ordered by (start, end). A span followed by a "(kind)" qualifier
/// only links to entities of that kind.
std::vector<SpanLinks> link_spans(const KnowledgeStore& store, std::string_view query_text,
                                  const EntityLinkingOptions& options = {});

/// Levenshtein distance over bytes divided by the longer length.
double normalized_edit_distance(std::string_view a, std::string_view b);

/// "<SPAN> can be linked to <label1>, <label2>, ..."
std::string format_link_line(std::string_view span_text, const std::vector<std::string>& labels);

std::string entity_label(const Entity& e);

class EntityLinkingAgent final : public Agent {
 public:
  EntityLinkingAgent(AgentDescriptor descriptor, EntityLinkingOptions options = {});
  AgentReport detect(const AgentContext& ctx) const override;

 private:
  EntityLinkingOptions options_;
};

// --- concept graph grounding ----------------------------------------------

struct ConceptHit {
  ByteSpan span;
  std::string term;  // key into KnowledgeStore::concepts()
};

/// Non-overlapping concept occurrences chosen longest-first (in tokens), then
/// leftmost. Returned in query order.
std::vector<ConceptHit> find_concepts(const KnowledgeStore& store, std::string_view query_text);

class ConceptGraphAgent final : public Agent {
 public:
  explicit ConceptGraphAgent(AgentDescriptor descriptor);
  AgentReport detect(const AgentContext& ctx) const override;
};

// --- configuration ----------------------------------------------------------

struct AgentConfig {
  std::string agent_id;
  bool enabled = true;
  std::chrono::milliseconds timeout = kDefaultAgentTimeout;
  std::optional<std::string> description;
  std::map<std::string, std::string> params;
};

std::string default_description(std::string_view agent_id);

/// Builds one of the four built-in agents. Throws ConfigError for unknown ids
/// or malformed params.
AgentPtr make_builtin_agent(const AgentConfig& config);

/// All four built-ins, enabled, in the canonical order.
AgentRegistry make_default_registry();
AgentRegistry make_registry(const std::vector<AgentConfig>& configs);

}  // namespace clarify
