#include "clarify/knowledge_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "clarify/codec.hpp"
#include "clarify/error.hpp"
#include "clarify/text.hpp"

namespace clarify {

namespace {

std::string field_path(const char* section, std::size_t i, const char* field = nullptr) {
  std::string out = std::string(section) + "[" + std::to_string(i) + "]";
  if (field) out += std::string(".") + field;
  return out;
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::ParseError, where + "." + key + ": missing");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& where, bool non_empty = true) {
  const Json& v = require(obj, key, where);
  if (!v.is_string()) fail(ErrorCode::ParseError, where + "." + key + ": expected string");
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) fail(ErrorCode::ParseError, where + "." + key + ": must not be empty");
  return s;
}

std::vector<std::string> string_list(const Json& obj, const char* key, const std::string& where, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) fail(ErrorCode::ParseError, where + "." + key + ": missing");
    return {};
  }
  if (!it->is_array()) fail(ErrorCode::ParseError, where + "." + key + ": expected array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_string()) {
      fail(ErrorCode::ParseError, where + "." + key + "[" + std::to_string(i) + "]: expected string");
    }
    out.push_back((*it)[i].get<std::string>());
  }
  return out;
}

const Json& section(const Json& root, const char* key) {
  static const Json empty = Json::array();
  auto it = root.find(key);
  if (it == root.end()) return empty;
  if (!it->is_array()) fail(ErrorCode::ParseError, std::string(key) + ": expected array");
  return *it;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

KnowledgeStore::KnowledgeStore(std::vector<Entity> entities, std::vector<ProductEntry> products,
                               std::vector<ConceptDefinition> concepts)
    : entities_(std::move(entities)), products_(std::move(products)) {
  std::set<std::pair<std::string, std::string>> name_kind;
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const auto& e = entities_[i];
    if (e.ref_id.empty() || e.name.empty() || e.kind.empty()) {
      fail(ErrorCode::InvalidArgument, field_path("entities", i) + ": ref_id, name and kind are required");
    }
    auto folded = text::to_lower(e.name);
    if (!name_kind.emplace(folded, e.kind).second) {
      fail(ErrorCode::DuplicateKey, "duplicate entity (name, kind) = (" + e.name + ", " + e.kind + ")");
    }
    if (!entity_by_ref_.emplace(e.ref_id, i).second) fail(ErrorCode::DuplicateKey, "duplicate ref_id " + e.ref_id);
    by_name_[folded].push_back(i);
    max_name_tokens_ = std::max(max_name_tokens_, text::tokenize(e.name).size());
  }
  for (auto& [name, idx] : by_name_) {
    std::sort(idx.begin(), idx.end(), [this](std::size_t a, std::size_t b) {
      const auto& x = entities_[a];
      const auto& y = entities_[b];
      return std::tie(x.kind, x.ref_id) < std::tie(y.kind, y.ref_id);
    });
  }

  std::set<std::string> display_names;
  for (std::size_t i = 0; i < products_.size(); ++i) {
    auto& p = products_[i];
    if (p.product_id.empty() || p.display_name.empty()) {
      fail(ErrorCode::InvalidArgument, field_path("products", i) + ": product_id and display_name are required");
    }
    if (!display_names.insert(p.display_name).second) {
      fail(ErrorCode::DuplicateKey, "duplicate product display_name " + p.display_name);
    }
    if (entity_by_ref_.count(p.product_id) || !product_by_ref_.emplace(p.product_id, i).second) {
      fail(ErrorCode::DuplicateKey, "duplicate ref_id " + p.product_id);
    }
    std::vector<std::string> normalized;
    for (const auto& kw : p.keywords) {
      auto toks = text::words(kw);
      if (toks.size() != 1) {
        fail(ErrorCode::InvalidArgument,
             field_path("products", i, "keywords") + ": keyword '" + kw + "' must be a single alphanumeric token");
      }
      if (std::find(normalized.begin(), normalized.end(), toks[0]) == normalized.end()) normalized.push_back(toks[0]);
    }
    if (normalized.empty()) fail(ErrorCode::InvalidArgument, field_path("products", i, "keywords") + ": empty");
    p.keywords = std::move(normalized);
  }

  for (auto& c : concepts) {
    if (text::words(c.term).empty()) fail(ErrorCode::InvalidArgument, "concept term '" + c.term + "' has no tokens");
    c.term = text::to_lower(c.term);
    for (auto& kw : c.keywords) kw = text::to_lower(kw);
    max_term_tokens_ = std::max(max_term_tokens_, text::tokenize(c.term).size());
    const auto key = c.term;
    if (!concepts_.try_emplace(key, std::move(c)).second) fail(ErrorCode::DuplicateKey, "duplicate concept term " + key);
  }
}

KnowledgeStore KnowledgeStore::from_json_text(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::ParseError, "line 1: top level must be an object");
  for (const auto& item : root.items()) {
    const auto& key = item.key();
    if (key != "entities" && key != "products" && key != "concepts") {
      fail(ErrorCode::ParseError, "unknown top-level key '" + key + "'");
    }
  }

  std::vector<Entity> entities;
  const Json& ents = section(root, "entities");
  for (std::size_t i = 0; i < ents.size(); ++i) {
    const auto where = field_path("entities", i);
    const Json& e = ents[i];
    if (!e.is_object()) fail(ErrorCode::ParseError, where + ": expected object");
    Entity ent{require_string(e, "ref_id", where), require_string(e, "name", where), require_string(e, "kind", where),
               {}};
    if (auto it = e.find("attributes"); it != e.end()) {
      if (!it->is_object()) fail(ErrorCode::ParseError, where + ".attributes: expected object");
      for (auto& [k, v] : it->items()) {
        if (!v.is_string()) fail(ErrorCode::ParseError, where + ".attributes." + k + ": expected string");
        ent.attributes.emplace(k, v.get<std::string>());
      }
    }
    entities.push_back(std::move(ent));
  }

  std::vector<ProductEntry> products;
  const Json& prods = section(root, "products");
  for (std::size_t i = 0; i < prods.size(); ++i) {
    const auto where = field_path("products", i);
    const Json& p = prods[i];
    if (!p.is_object()) fail(ErrorCode::ParseError, where + ": expected object");
    products.push_back(ProductEntry{require_string(p, "product_id", where), require_string(p, "display_name", where),
                                    string_list(p, "keywords", where, true)});
  }

  std::vector<ConceptDefinition> concepts;
  const Json& cons = section(root, "concepts");
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const auto where = field_path("concepts", i);
    const Json& c = cons[i];
    if (!c.is_object()) fail(ErrorCode::ParseError, where + ": expected object");
    concepts.push_back(ConceptDefinition{require_string(c, "term", where),
                                         require_string(c, "definition", where, false),
                                         string_list(c, "keywords", where, false)});
  }

  try {
    return KnowledgeStore(std::move(entities), std::move(products), std::move(concepts));
  } catch (const Error& e) {
    // Field-level violations discovered during indexing are still parse errors
    // from the caller's point of view, except for duplicate keys.
    if (e.code() == ErrorCode::DuplicateKey) throw;
    fail(ErrorCode::ParseError, e.what());
  }
}

KnowledgeStore KnowledgeStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot open store file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::vector<Entity> KnowledgeStore::lookup_name(std::string_view name) const {
  auto it = by_name_.find(text::to_lower(name));
  if (it == by_name_.end()) return {};
  std::vector<Entity> out;
  out.reserve(it->second.size());
  for (auto i : it->second) out.push_back(entities_[i]);
  return out;
}

ResolvedRef KnowledgeStore::resolve_ref(std::string_view ref_id) const {
  const std::string key(ref_id);
  if (auto it = entity_by_ref_.find(key); it != entity_by_ref_.end()) return entities_[it->second];
  if (auto it = product_by_ref_.find(key); it != product_by_ref_.end()) return products_[it->second];
  fail(ErrorCode::UnknownRef, "unknown ref_id '" + key + "'");
}

StoreHandle::StoreHandle(StoreSnapshot initial) : current_(std::move(initial)) {}

StoreSnapshot StoreHandle::snapshot() const {
  std::lock_guard lock(mu_);
  return current_;
}

void StoreHandle::replace(StoreSnapshot next) {
  std::lock_guard lock(mu_);
  current_ = std::move(next);
}

void StoreHandle::reload(const std::filesystem::path& path) {
  auto next = std::make_shared<const KnowledgeStore>(KnowledgeStore::load(path));
  replace(std::move(next));
}

}  // namespace clarify
