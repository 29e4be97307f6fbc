#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clarify/agents.hpp"
#include "clarify/http_backend.hpp"
#include "clarify/orchestrator.hpp"

namespace clarify {

/// Flat key -> raw value map. `[section]` headers prefix keys with
/// "section."; quoted values are unquoted; arrays of strings are joined with
/// commas.
using ConfigMap = std::map<std::string, std::string>;

/// Parses the TOML-style subset: comments (#), [section] headers,
/// key = "string" | number | true/false | ["a", "b"]. Duplicate keys and
/// malformed lines are ConfigError with a line number.
ConfigMap parse_config_text(std::string_view text, const std::string& source = "config");

inline constexpr std::string_view kEnvPrefix = "CLARIFY_";

/// Environment variable that overrides `key`: "http.url" -> "CLARIFY_HTTP_URL".
std::string env_name_for(std::string_view key);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

struct BackendSettings {
  std::string kind = "mock";  // "mock" or "http"
  std::filesystem::path mock_rules_path;  // empty: built-in default response only
  HttpBackendConfig http;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store_path;  // empty: no knowledge
  std::vector<AgentConfig> agents;   // canonical order
  BackendSettings backend;
  SurfacePolicy surface_policy = SurfacePolicy::AskFirst;
  std::size_t history_window = 8;
  int max_tokens = 512;
  std::chrono::seconds session_ttl{30 * 60};
  std::string cors_origin;              // empty: CORS headers off
  std::filesystem::path snapshot_dir;   // empty: no snapshots
  bool debug_trace = false;
};

/// Every key a config file may set, apart from per-agent keys
/// "agents.<id>.<name>".
const std::vector<std::string>& known_config_keys();

/// Builds and validates a config. Relative paths resolve against `base_dir`.
/// Environment overrides are applied first for every known key, every key in
/// `values`, and each built-in agent's enabled/timeout_ms/description.
ServiceConfig build_service_config(ConfigMap values, const std::filesystem::path& base_dir,
                                   const EnvLookup& env = {});

ServiceConfig load_service_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

}  // namespace clarify
