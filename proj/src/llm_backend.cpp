#include "clarify/llm_backend.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "clarify/codec.hpp"
#include "clarify/error.hpp"

namespace clarify {

void validate_request(const CompletionRequest& req) {
  if (req.prompt.empty()) fail(ErrorCode::InvalidArgument, "completion prompt is empty");
  if (req.max_tokens <= 0) fail(ErrorCode::InvalidArgument, "max_tokens must be positive");
  if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
    fail(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  }
}

std::string LlmBackend::complete(const CompletionRequest& req) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  const auto start = std::chrono::steady_clock::now();
  struct Timer {
    std::atomic<std::uint64_t>& sink;
    std::chrono::steady_clock::time_point start;
    ~Timer() {
      auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
      sink.fetch_add(static_cast<std::uint64_t>(us.count()), std::memory_order_relaxed);
    }
  } timer{latency_us_, start};
  validate_request(req);
  return do_complete(req);
}

BackendStats LlmBackend::stats() const noexcept {
  return BackendStats{calls_.load(std::memory_order_relaxed), latency_us_.load(std::memory_order_relaxed) / 1000};
}

namespace {

std::string response_text(const Json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_object() || v.is_array()) return v.dump();
  fail(ErrorCode::ParseError, where + ": response must be a string or JSON value");
}

}  // namespace

RuleTable parse_mock_rules(const std::string& json_text) {
  const Json root = parse_json(json_text, "mock rules");
  if (!root.is_object()) fail(ErrorCode::ParseError, "mock rules: top level must be an object");
  RuleTable table;
  if (auto it = root.find("default"); it != root.end()) table.default_response = response_text(*it, "default");
  const auto rules = root.value("rules", Json::array());
  if (!rules.is_array()) fail(ErrorCode::ParseError, "mock rules: 'rules' must be an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto where = "rules[" + std::to_string(i) + "]";
    const Json& r = rules[i];
    if (!r.is_object() || !r.contains("contains")) fail(ErrorCode::ParseError, where + ": needs 'contains'");
    MockRule rule;
    const Json& c = r["contains"];
    if (c.is_string()) {
      rule.contains.push_back(c.get<std::string>());
    } else if (c.is_array() && !c.empty()) {
      for (const auto& s : c) {
        if (!s.is_string()) fail(ErrorCode::ParseError, where + ".contains: expected strings");
        rule.contains.push_back(s.get<std::string>());
      }
    } else {
      fail(ErrorCode::ParseError, where + ".contains: expected a string or non-empty array");
    }
    if (auto e = r.find("error"); e != r.end()) {
      const auto name = e->get<std::string>();
      if (name != "BackendUnavailable" && name != "BackendTimeout" && name != "MalformedResponse") {
        fail(ErrorCode::ParseError, where + ".error: unknown error '" + name + "'");
      }
      rule.error = name;
    } else if (auto resp = r.find("response"); resp != r.end()) {
      rule.response = response_text(*resp, where);
    } else {
      fail(ErrorCode::ParseError, where + ": needs 'response' or 'error'");
    }
    table.rules.push_back(std::move(rule));
  }
  return table;
}

RuleTable load_mock_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot open mock rules file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mock_rules(buf.str());
}

MockBackend::MockBackend(RuleTable table) : table_(std::move(table)) {}

std::optional<std::size_t> MockBackend::matching_rule(std::string_view prompt) const {
  for (std::size_t i = 0; i < table_.rules.size(); ++i) {
    bool all = true;
    for (const auto& s : table_.rules[i].contains) {
      if (prompt.find(s) == std::string_view::npos) {
        all = false;
        break;
      }
    }
    if (all) return i;
  }
  return std::nullopt;
}

std::string MockBackend::do_complete(const CompletionRequest& req) {
  auto idx = matching_rule(req.prompt);
  if (!idx) return table_.default_response;
  const auto& rule = table_.rules[*idx];
  if (rule.error) {
    const std::string msg = "mock rule " + std::to_string(*idx) + " simulates " + *rule.error;
    if (*rule.error == "BackendTimeout") fail(ErrorCode::BackendTimeout, msg);
    if (*rule.error == "MalformedResponse") fail(ErrorCode::MalformedResponse, msg);
    fail(ErrorCode::BackendUnavailable, msg);
  }
  return rule.response;
}

CallbackBackend::CallbackBackend(Fn fn, std::string kind) : fn_(std::move(fn)), kind_(std::move(kind)) {}

}  // namespace clarify
