#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clarify {

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 512;
  double temperature = 0.0;
};

/// Throws InvalidArgument for an empty prompt, non-positive max_tokens or a
/// temperature outside [0, 2].
void validate_request(const CompletionRequest& req);

struct BackendStats {
  std::uint64_t total_calls = 0;
  std::uint64_t total_latency_ms = 0;
};

/// Completion interface. `complete` is the only entry point; it counts every
/// call, failed ones included, before delegating to the implementation.
/// Implementations must tolerate concurrent calls.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  LlmBackend() = default;
  LlmBackend(const LlmBackend&) = delete;
  LlmBackend& operator=(const LlmBackend&) = delete;

  std::string complete(const CompletionRequest& req);
  BackendStats stats() const noexcept;
  virtual std::string_view kind() const noexcept = 0;

 protected:
  virtual std::string do_complete(const CompletionRequest& req) = 0;

 private:
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> latency_us_{0};
};

/// Returned by the mock when no rule matches: a well-formed "not ambiguous"
/// decision in the unified output format.
inline constexpr std::string_view kDefaultMockResponse =
    R"({"ambiguous":false,"clarification_question":null,"referenced_agents":[]})";

struct MockRule {
  std::vector<std::string> contains;  // every substring must occur in the prompt
  std::string response;
  std::optional<std::string> error;  // "BackendUnavailable" | "BackendTimeout" | "MalformedResponse"
};

struct RuleTable {
  std::vector<MockRule> rules;
  std::string default_response{kDefaultMockResponse};
};

/// Rule file format:
///   {"rules": [{"contains": "text" | ["a", "b"], "response": "raw" | {...}, "error": "..."}],
///    "default": "raw" | {...}}
/// Object-valued responses are serialized compactly. First matching rule wins.
RuleTable parse_mock_rules(const std::string& json_text);
RuleTable load_mock_rules(const std::filesystem::path& path);

/// Deterministic rule-table backend for tests and offline runs.
class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(RuleTable table = {});
  std::string_view kind() const noexcept override { return "mock"; }

  /// Index of the rule that would answer `prompt`, if any.
  std::optional<std::size_t> matching_rule(std::string_view prompt) const;

 protected:
  std::string do_complete(const CompletionRequest& req) override;

 private:
  RuleTable table_;
};

/// Backend driven by a callable; used for stubs such as garbage or failing models.
class CallbackBackend final : public LlmBackend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  explicit CallbackBackend(Fn fn, std::string kind = "callback");
  std::string_view kind() const noexcept override { return kind_; }

 protected:
  std::string do_complete(const CompletionRequest& req) override { return fn_(req); }

 private:
  Fn fn_;
  std::string kind_;
};

/// Forwards to another backend while keeping its own stats, so one pipeline
/// run can count exactly the calls it made on a shared backend.
class CountingBackend final : public LlmBackend {
 public:
  explicit CountingBackend(LlmBackend& inner) : inner_(inner) {}
  std::string_view kind() const noexcept override { return inner_.kind(); }

 protected:
  std::string do_complete(const CompletionRequest& req) override { return inner_.complete(req); }

 private:
  LlmBackend& inner_;
};

}  // namespace clarify
