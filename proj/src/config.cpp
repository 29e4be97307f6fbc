#include "clarify/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>

#include "clarify/eval.hpp"
#include "clarify/text.hpp"

namespace clarify {

namespace {

constexpr std::string_view kAgentPrefix = "agents.";

const std::vector<std::string_view>& builtin_ids() {
  static const std::vector<std::string_view> ids{agent_ids::kGeneric, agent_ids::kProduct, agent_ids::kEntityLinking,
                                                 agent_ids::kConceptGraph};
  return ids;
}

bool is_key_char(char c) { return text::is_alnum(c) || c == '_' || c == '.' || c == '-'; }

class LineParser {
 public:
  LineParser(std::string_view line, std::string where) : s_(line), where_(std::move(where)) {}

  [[noreturn]] void error(const std::string& msg) const { fail(ErrorCode::ConfigError, where_ + ": " + msg); }

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }

  bool at_end_or_comment() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }

  std::string key() {
    skip_ws();
    const auto start = i_;
    while (i_ < s_.size() && is_key_char(s_[i_])) ++i_;
    if (i_ == start) error("expected a key");
    return std::string(s_.substr(start, i_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (i_ >= s_.size() || s_[i_] != c) error(std::string("expected '") + c + "'");
    ++i_;
  }

  std::string quoted() {
    expect('"');
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) error("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: error(std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (i_ >= s_.size()) error("unterminated string");
    ++i_;
    return out;
  }

  std::string bare() {
    skip_ws();
    const auto start = i_;
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '#' && s_[i_] != ',' &&
           s_[i_] != ']') {
      ++i_;
    }
    if (i_ == start) error("expected a value");
    return std::string(s_.substr(start, i_ - start));
  }

  std::string scalar() {
    skip_ws();
    return i_ < s_.size() && s_[i_] == '"' ? quoted() : bare();
  }

  std::string value() {
    skip_ws();
    if (i_ < s_.size() && s_[i_] == '[') {
      ++i_;
      std::vector<std::string> items;
      skip_ws();
      if (i_ < s_.size() && s_[i_] == ']') {
        ++i_;
        return {};
      }
      while (true) {
        auto item = scalar();
        if (item.find(',') != std::string::npos) error("array items may not contain commas");
        items.push_back(std::move(item));
        skip_ws();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          continue;
        }
        expect(']');
        break;
      }
      return text::join(items, ",");
    }
    return scalar();
  }

  std::string section() {
    expect('[');
    auto name = key();
    expect(']');
    return name;
  }

  bool peek(char c) {
    skip_ws();
    return i_ < s_.size() && s_[i_] == c;
  }

 private:
  std::string_view s_;
  std::string where_;
  std::size_t i_ = 0;
};

long long parse_integer(const std::string& key, const std::string& v, long long lo, long long hi) {
  long long n = 0;
  try {
    std::size_t used = 0;
    n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
  } catch (const std::logic_error&) {
    fail(ErrorCode::ConfigError, key + " must be an integer, got '" + v + "'");
  }
  if (n < lo || n > hi) {
    fail(ErrorCode::ConfigError, key + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return n;
}

bool parse_boolean(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(ErrorCode::ConfigError, key + " must be true or false, got '" + v + "'");
}

class Reader {
 public:
  explicit Reader(ConfigMap values) : values_(std::move(values)) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    auto v = it->second;
    values_.erase(it);
    return v;
  }

  std::string str(const std::string& key, std::string def) { return take(key).value_or(std::move(def)); }

  long long integer(const std::string& key, long long def, long long lo, long long hi) {
    auto v = take(key);
    return v ? parse_integer(key, *v, lo, hi) : def;
  }

  bool boolean(const std::string& key, bool def) {
    auto v = take(key);
    return v ? parse_boolean(key, *v) : def;
  }

  ConfigMap take_prefix(std::string_view prefix) {
    ConfigMap out;
    for (auto it = values_.begin(); it != values_.end();) {
      if (it->first.rfind(prefix, 0) == 0) {
        out.emplace(it->first.substr(prefix.size()), it->second);
        it = values_.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

  void reject_leftovers(const std::string& what = "unknown config key '") const {
    if (!values_.empty()) fail(ErrorCode::ConfigError, what + values_.begin()->first + "'");
  }

 private:
  ConfigMap values_;
};

std::filesystem::path resolve_path(const std::string& raw, const std::filesystem::path& base) {
  if (raw.empty()) return {};
  std::filesystem::path p(raw);
  return p.is_absolute() ? p : base / p;
}

void require_existing(const std::filesystem::path& p, const std::string& key) {
  if (!p.empty() && !std::filesystem::exists(p)) {
    fail(ErrorCode::ConfigError, key + ": path does not exist: " + p.string());
  }
}

std::vector<AgentConfig> build_agents(ConfigMap agent_values) {
  std::vector<AgentConfig> out;
  Reader all(std::move(agent_values));
  for (auto id : builtin_ids()) {
    const auto prefix = std::string(id) + ".";
    const auto key = std::string(kAgentPrefix) + prefix;
    Reader ar(all.take_prefix(prefix));
    AgentConfig cfg{std::string(id), true, kDefaultAgentTimeout, std::nullopt, {}};
    if (auto v = ar.take("enabled")) cfg.enabled = parse_boolean(key + "enabled", *v);
    if (auto v = ar.take("timeout_ms")) {
      cfg.timeout = std::chrono::milliseconds(parse_integer(key + "timeout_ms", *v, 1, 600000));
    }
    cfg.description = ar.take("description");
    cfg.params = ar.take_prefix("");
    out.push_back(std::move(cfg));
  }
  all.reject_leftovers("unknown agent in config key 'agents.");
  return out;
}

}  // namespace

ConfigMap parse_config_text(std::string_view text, const std::string& source) {
  ConfigMap out;
  std::string prefix;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    LineParser p(line, source + ":" + std::to_string(line_no));
    if (p.at_end_or_comment()) continue;
    if (p.peek('[')) {
      prefix = p.section() + ".";
    } else {
      auto key = prefix + p.key();
      p.expect('=');
      auto value = p.value();
      if (!out.emplace(key, std::move(value)).second) p.error("duplicate key '" + key + "'");
    }
    if (!p.at_end_or_comment()) p.error("unexpected trailing characters");
  }
  return out;
}

std::string env_name_for(std::string_view key) {
  std::string out(kEnvPrefix);
  for (char c : key) out += (c == '.' || c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "listen.host",          "listen.port",         "store.path",          "backend",
      "mock.rules_path",      "http.url",            "http.model",          "http.api_key_env",
      "http.timeout_ms",      "pipeline.surface_policy", "pipeline.history_window", "pipeline.max_tokens",
      "session.ttl_seconds",  "session.snapshot_dir", "cors.origin",        "debug.trace"};
  return keys;
}

ServiceConfig build_service_config(ConfigMap values, const std::filesystem::path& base_dir, const EnvLookup& env) {
  if (env) {
    std::set<std::string> keys(known_config_keys().begin(), known_config_keys().end());
    for (const auto& [k, v] : values) keys.insert(k);
    for (auto id : builtin_ids()) {
      for (auto name : {"enabled", "timeout_ms", "description"}) {
        keys.insert(std::string(kAgentPrefix) + std::string(id) + "." + name);
      }
    }
    for (const auto& k : keys) {
      if (auto v = env(env_name_for(k))) values[k] = *v;
    }
  }

  Reader r(std::move(values));
  ServiceConfig c;
  c.host = r.str("listen.host", c.host);
  if (c.host.empty()) fail(ErrorCode::ConfigError, "listen.host is empty");
  c.port = static_cast<int>(r.integer("listen.port", c.port, 0, 65535));
  c.store_path = resolve_path(r.str("store.path", ""), base_dir);
  require_existing(c.store_path, "store.path");

  c.backend.kind = r.str("backend", "mock");
  c.backend.mock_rules_path = resolve_path(r.str("mock.rules_path", ""), base_dir);
  c.backend.http.url = r.str("http.url", "");
  c.backend.http.model = r.str("http.model", "");
  c.backend.http.api_key_env = r.str("http.api_key_env", c.backend.http.api_key_env);
  c.backend.http.timeout = std::chrono::milliseconds(r.integer("http.timeout_ms", 30000, 1, 3600000));
  if (c.backend.kind == "mock") {
    require_existing(c.backend.mock_rules_path, "mock.rules_path");
  } else if (c.backend.kind == "http") {
    if (c.backend.http.url.empty()) fail(ErrorCode::ConfigError, "backend = http needs http.url");
    if (c.backend.http.model.empty()) fail(ErrorCode::ConfigError, "backend = http needs http.model");
    split_url(c.backend.http.url);
  } else {
    fail(ErrorCode::ConfigError, "backend must be mock or http, got '" + c.backend.kind + "'");
  }

  c.surface_policy = parse_surface_policy(r.str("pipeline.surface_policy", "ask_first"));
  c.history_window = static_cast<std::size_t>(r.integer("pipeline.history_window", 8, 0, 1000));
  c.max_tokens = static_cast<int>(r.integer("pipeline.max_tokens", 512, 1, 1 << 20));
  c.session_ttl = std::chrono::seconds(r.integer("session.ttl_seconds", 30 * 60, 1, 30LL * 24 * 3600));
  c.snapshot_dir = resolve_path(r.str("session.snapshot_dir", ""), base_dir);
  c.cors_origin = r.str("cors.origin", "");
  c.debug_trace = r.boolean("debug.trace", false);
  c.agents = build_agents(r.take_prefix(kAgentPrefix));
  r.reject_leftovers();
  // Agent params are checked by constructing the agents once.
  make_registry(c.agents);
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path, const EnvLookup& env) {
  const auto text = eval::read_text_file(path);
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return build_service_config(parse_config_text(text, path.string()), base, env);
}

}  // namespace clarify
