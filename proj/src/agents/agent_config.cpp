#include <algorithm>
#include <charconv>

#include "clarify/agents.hpp"
#include "clarify/error.hpp"

namespace clarify {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    auto item = text::trim(std::string_view(s).substr(start, comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = comma + 1;
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const auto s = text::to_lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorCode::ConfigError, key + ": expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ConfigError, key + ": expected a number, got '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    fail(ErrorCode::ConfigError, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

void reject_unknown(const AgentConfig& cfg, std::initializer_list<std::string_view> known) {
  for (const auto& [k, v] : cfg.params) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      fail(ErrorCode::ConfigError, "agent '" + cfg.agent_id + "': unknown parameter '" + k + "'");
    }
  }
}

}  // namespace

std::string default_description(std::string_view agent_id) {
  if (agent_id == agent_ids::kGeneric) {
    return "Sentence-level detector for domain-agnostic ambiguity: references without an antecedent, "
           "requests with no discernible intent, and open-ended time or scope phrases.";
  }
  if (agent_id == agent_ids::kProduct) {
    return "Product classifier that reports when the query could be answered in the context of more than one "
           "product.";
  }
  if (agent_id == agent_ids::kEntityLinking) {
    return "Entity linker that looks up mentions in the query against the entity database and lists every record "
           "a mention could refer to.";
  }
  if (agent_id == agent_ids::kConceptGraph) {
    return "Concept graph lookup that recognizes platform-specific terminology and supplies its definitions. It "
           "never reports ambiguity.";
  }
  return {};
}

AgentPtr make_builtin_agent(const AgentConfig& cfg) {
  AgentDescriptor d{cfg.agent_id, cfg.description.value_or(default_description(cfg.agent_id)), cfg.enabled,
                    cfg.timeout};
  if (d.description.empty()) fail(ErrorCode::ConfigError, "unknown agent '" + cfg.agent_id + "'");
  if (d.timeout.count() <= 0) fail(ErrorCode::ConfigError, "agent '" + cfg.agent_id + "': timeout_ms must be > 0");
  const std::string prefix = "agents." + cfg.agent_id + ".";

  if (cfg.agent_id == agent_ids::kGeneric) {
    reject_unknown(cfg, {"reference_words", "scope_phrases", "aleatoric_lexicon", "history_window"});
    GenericAgentOptions opts;
    if (auto it = cfg.params.find("reference_words"); it != cfg.params.end()) opts.reference_words = split_list(it->second);
    if (auto it = cfg.params.find("scope_phrases"); it != cfg.params.end()) opts.scope_phrases = split_list(it->second);
    if (auto it = cfg.params.find("aleatoric_lexicon"); it != cfg.params.end()) {
      opts.scope_phrases = split_list(it->second);
    }
    if (auto it = cfg.params.find("history_window"); it != cfg.params.end()) {
      opts.history_window = parse_size(prefix + "history_window", it->second);
    }
    return std::make_shared<GenericAmbiguityAgent>(std::move(d), std::move(opts));
  }
  if (cfg.agent_id == agent_ids::kProduct) {
    reject_unknown(cfg, {});
    return std::make_shared<ProductAmbiguityAgent>(std::move(d));
  }
  if (cfg.agent_id == agent_ids::kEntityLinking) {
    reject_unknown(cfg, {"fuzzy", "fuzzy_max_distance"});
    EntityLinkingOptions opts;
    if (auto it = cfg.params.find("fuzzy"); it != cfg.params.end()) opts.fuzzy = parse_bool(prefix + "fuzzy", it->second);
    if (auto it = cfg.params.find("fuzzy_max_distance"); it != cfg.params.end()) {
      opts.fuzzy_max_distance = parse_double(prefix + "fuzzy_max_distance", it->second);
      if (opts.fuzzy_max_distance < 0.0 || opts.fuzzy_max_distance > 1.0) {
        fail(ErrorCode::ConfigError, prefix + "fuzzy_max_distance must lie in [0, 1]");
      }
    }
    return std::make_shared<EntityLinkingAgent>(std::move(d), opts);
  }
  reject_unknown(cfg, {});
  return std::make_shared<ConceptGraphAgent>(std::move(d));
}

AgentRegistry make_registry(const std::vector<AgentConfig>& configs) {
  AgentRegistry registry;
  for (const auto& c : configs) registry.add(make_builtin_agent(c));
  return registry;
}

AgentRegistry make_default_registry() {
  std::vector<AgentConfig> configs;
  for (auto id : {agent_ids::kGeneric, agent_ids::kProduct, agent_ids::kEntityLinking, agent_ids::kConceptGraph}) {
    configs.push_back(AgentConfig{std::string(id), true, kDefaultAgentTimeout, std::nullopt, {}});
  }
  return make_registry(configs);
}

}  // namespace clarify
