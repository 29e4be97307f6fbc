#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "clarify/domain.hpp"

namespace clarify {

struct Entity {
  std::string ref_id;
  std::string name;
  std::string kind;
  std::map<std::string, std::string> attributes;

  bool operator==(const Entity&) const = default;
};

struct ProductEntry {
  std::string product_id;
  std::string display_name;
  std::vector<std::string> keywords;  // lowercase single tokens, deduplicated

  bool operator==(const ProductEntry&) const = default;
};

using ResolvedRef = std::variant<Entity, ProductEntry>;

/// Immutable, fully indexed view of the three knowledge sources.
///
/// Invariants checked on construction (DuplicateKey otherwise):
///   - entity (case-folded name, kind) pairs and ref ids are unique
///   - product display names are unique, keywords non-empty
///   - ref ids are unique across entities and products
///   - concept terms are unique after lowercasing
class KnowledgeStore {
 public:
  KnowledgeStore() = default;
  KnowledgeStore(std::vector<Entity> entities, std::vector<ProductEntry> products,
                 std::vector<ConceptDefinition> concepts);

  /// Parses the documented JSON schema. Errors carry the line or field path.
  static KnowledgeStore from_json_text(const std::string& text);
  static KnowledgeStore load(const std::filesystem::path& path);

  /// Case-insensitive exact name match ordered by (kind, ref_id).
  std::vector<Entity> lookup_name(std::string_view name) const;

  /// Throws UnknownRef for ids that name neither an entity nor a product.
  ResolvedRef resolve_ref(std::string_view ref_id) const;

  const std::vector<Entity>& entities() const noexcept { return entities_; }
  const std::vector<ProductEntry>& products() const noexcept { return products_; }
  /// Concept definitions keyed by lowercase term.
  const std::map<std::string, ConceptDefinition>& concepts() const noexcept { return concepts_; }

  /// Longest entity name in tokens; bounds the entity-linking span search.
  std::size_t max_entity_name_tokens() const noexcept { return max_name_tokens_; }
  std::size_t max_concept_term_tokens() const noexcept { return max_term_tokens_; }

  bool operator==(const KnowledgeStore& other) const {
    return entities_ == other.entities_ && products_ == other.products_ && concepts_ == other.concepts_;
  }

 private:
  std::vector<Entity> entities_;
  std::vector<ProductEntry> products_;
  std::map<std::string, ConceptDefinition> concepts_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_name_;  // case-folded name -> sorted indices
  std::unordered_map<std::string, std::size_t> entity_by_ref_;
  std::unordered_map<std::string, std::size_t> product_by_ref_;
  std::size_t max_name_tokens_ = 0;
  std::size_t max_term_tokens_ = 0;
};

using StoreSnapshot = std::shared_ptr<const KnowledgeStore>;

/// Holds the current store; readers take a snapshot that stays valid for the
/// whole request while `reload` swaps in a new store atomically.
class StoreHandle {
 public:
  explicit StoreHandle(StoreSnapshot initial = std::make_shared<const KnowledgeStore>());

  StoreSnapshot snapshot() const;
  void replace(StoreSnapshot next);
  void reload(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  StoreSnapshot current_;
};

}  // namespace clarify
