#include <doctest.h>

#include <atomic>
#include <thread>

#include "clarify/codec.hpp"
#include "clarify/llm_backend.hpp"
#include "support.hpp"

using namespace clarify;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("fixture rule table answers the entity prompt with an ambiguous decision") {
  MockBackend mock(clarify::testing::fixture_rules());
  const std::string prompt = "### entity_linking\nAmbiguity Detected: True\nCurrent user query: what is TEST\n";
  const auto out = Json::parse(mock.complete({prompt}));
  CHECK(out["ambiguous"] == true);
  CHECK(out["referenced_agents"] == Json::array({"entity_linking"}));
  CHECK(out["clarification_question"].get<std::string>().find("TEST") != std::string::npos);
  CHECK(mock.matching_rule(prompt) == std::optional<std::size_t>{0});
}

TEST_CASE("the mock answers unmatched prompts with the unambiguous default") {
  MockBackend mock(clarify::testing::fixture_rules());
  CHECK(mock.complete({"nothing relevant"}) == Json::parse(kDefaultMockResponse).dump());
  MockBackend bare;
  CHECK(bare.complete({"x"}) == std::string(kDefaultMockResponse));
  CHECK(bare.matching_rule("x") == std::nullopt);
}

TEST_CASE("first matching rule wins and every substring must occur") {
  const auto table = parse_mock_rules(R"({"rules":[
      {"contains":["alpha","beta"],"response":"both"},
      {"contains":"alpha","response":"first only"},
      {"contains":["ALPHA"],"response":"upper"}],
    "default":"none"})");
  MockBackend mock(table);
  CHECK(mock.complete({"alpha and beta"}) == "both");
  CHECK(mock.complete({"beta then alpha"}) == "both");
  CHECK(mock.complete({"alpha"}) == "first only");
  CHECK(mock.complete({"ALPHA"}) == "upper");
  CHECK(mock.complete({"gamma"}) == "none");
}

TEST_CASE("error rules raise the named backend error and still count the call") {
  const auto table = parse_mock_rules(R"({"rules":[
      {"contains":"down","error":"BackendUnavailable"},
      {"contains":"slow","error":"BackendTimeout"},
      {"contains":"junk","error":"MalformedResponse"}]})");
  MockBackend mock(table);
  CHECK(code_of([&] { mock.complete({"down"}); }) == ErrorCode::BackendUnavailable);
  CHECK(code_of([&] { mock.complete({"slow"}); }) == ErrorCode::BackendTimeout);
  CHECK(code_of([&] { mock.complete({"junk"}); }) == ErrorCode::MalformedResponse);
  mock.complete({"fine"});
  CHECK(mock.stats().total_calls == 4);
}

TEST_CASE("malformed rule files are parse errors") {
  CHECK(code_of([] { parse_mock_rules("[]"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_mock_rules(R"({"rules":{}})"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_mock_rules(R"({"rules":[{"response":"x"}]})"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_mock_rules(R"({"rules":[{"contains":[],"response":"x"}]})"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_mock_rules(R"({"rules":[{"contains":"a"}]})"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_mock_rules(R"({"rules":[{"contains":"a","error":"Oops"}]})"); }) ==
        ErrorCode::ParseError);
  CHECK(code_of([] { parse_mock_rules("{bad"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { load_mock_rules("/nonexistent/rules.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("the mock is deterministic across instances") {
  MockBackend a(clarify::testing::fixture_rules());
  MockBackend b(clarify::testing::fixture_rules());
  for (const auto* p : {"### product_ambiguity", "Task: clarify", "Task: resolve\nUser answer: the orders dataset",
                        "unmatched"}) {
    const auto first = a.complete({p});
    CHECK(first == a.complete({p}));
    CHECK(first == b.complete({p}));
  }
}

TEST_CASE("requests are validated before the backend sees them") {
  MockBackend mock;
  CHECK(code_of([&] { mock.complete({""}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { mock.complete({"x", 0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { mock.complete({"x", 10, 2.5}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { mock.complete({"x", 10, -0.1}); }) == ErrorCode::InvalidArgument);
  CHECK_NOTHROW(mock.complete({"x", 10, 2.0}));
  // Rejected requests are still calls.
  CHECK(mock.stats().total_calls == 5);
}

TEST_CASE("call counting is exact under concurrency") {
  std::atomic<int> seen{0};
  CallbackBackend cb([&](const CompletionRequest&) {
    ++seen;
    return std::string("ok");
  });
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 250; ++i) cb.complete({"p"});
    });
  }
  for (auto& t : threads) t.join();
  CHECK(cb.stats().total_calls == 2000);
  CHECK(seen == 2000);
}

TEST_CASE("a counting wrapper counts its own calls and forwards to the shared backend") {
  MockBackend shared;
  shared.complete({"warm-up"});
  CountingBackend view(shared);
  view.complete({"a"});
  view.complete({"b"});
  CHECK(view.stats().total_calls == 2);
  CHECK(shared.stats().total_calls == 3);
  CHECK(view.kind() == "mock");

  CallbackBackend failing([](const CompletionRequest&) -> std::string { fail(ErrorCode::BackendTimeout, "slow"); });
  CountingBackend counted(failing);
  CHECK(code_of([&] { counted.complete({"x"}); }) == ErrorCode::BackendTimeout);
  CHECK(counted.stats().total_calls == 1);
  CHECK(failing.stats().total_calls == 1);
}
