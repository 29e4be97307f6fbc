#include <doctest.h>

#include <httplib.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <thread>

#include "clarify/codec.hpp"
#include "clarify/http_backend.hpp"
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

/// httplib server on a free loopback port, serving until destroyed.
class LocalServer {
 public:
  explicit LocalServer(const std::function<void(httplib::Server&)>& routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendConfig config_for(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
  HttpBackendConfig c;
  c.url = url;
  c.model = "test-model";
  c.api_key_env = "CLARIFY_TEST_NET_KEY";
  c.timeout = timeout;
  return c;
}

/// A loopback port with nothing listening on it.
int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  socklen_t len = sizeof(addr);
  REQUIRE(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace

TEST_CASE("URLs split into origin and path") {
  CHECK(split_url("http://localhost:8000/v1/chat/completions").origin == "http://localhost:8000");
  CHECK(split_url("http://localhost:8000/v1/chat/completions").path == "/v1/chat/completions");
  CHECK(split_url("http://example.com").path == "/");
  CHECK(code_of([] { split_url("localhost:8000"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { split_url("ftp://x/y"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { split_url("http:///path"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { HttpBackend(config_for("http://localhost/x", std::chrono::milliseconds(0))); }) ==
        ErrorCode::ConfigError);
  auto no_model = config_for("http://localhost/x");
  no_model.model.clear();
  CHECK(code_of([&] { HttpBackend b(no_model); }) == ErrorCode::ConfigError);
}

TEST_CASE("the chat-completion request carries the prompt and sampling parameters") {
  Json seen;
  std::string auth;
  LocalServer server([&](httplib::Server& s) {
    s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen = Json::parse(req.body);
      auth = req.get_header_value("Authorization");
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
    });
  });
  ::setenv("CLARIFY_TEST_NET_KEY", "sekret", 1);
  HttpBackend backend(config_for(server.url("/v1/chat/completions")));
  CHECK(backend.complete({"the prompt", 64, 0.5}) == "hello");
  ::unsetenv("CLARIFY_TEST_NET_KEY");
  CHECK(seen["model"] == "test-model");
  CHECK(seen["messages"] == Json::array({Json{{"role", "user"}, {"content", "the prompt"}}}));
  CHECK(seen["max_tokens"] == 64);
  CHECK(seen["temperature"] == 0.5);
  CHECK(auth == "Bearer sekret");
  CHECK(backend.stats().total_calls == 1);
  CHECK(backend.kind() == "http");
}

TEST_CASE("no Authorization header is sent without a key") {
  bool had_auth = true;
  LocalServer server([&](httplib::Server& s) {
    s.Post("/c", [&](const httplib::Request& req, httplib::Response& res) {
      had_auth = req.has_header("Authorization");
      res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
    });
  });
  ::unsetenv("CLARIFY_TEST_NET_KEY");
  HttpBackend backend(config_for(server.url("/c")));
  backend.complete({"p"});
  CHECK_FALSE(had_auth);
}

TEST_CASE("HTTP failures map to backend error codes") {
  LocalServer server([](httplib::Server& s) {
    s.Post("/500", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    s.Post("/504", [](const httplib::Request&, httplib::Response& res) { res.status = 504; });
    s.Post("/text", [](const httplib::Request&, httplib::Response& res) { res.set_content("not json", "text/plain"); });
    s.Post("/shape", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
    s.Post("/number", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"message":{"content":5}}]})", "application/json");
    });
    s.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
    });
  });
  auto call = [&](const std::string& path, std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
    return code_of([&] {
      HttpBackend backend(config_for(server.url(path), timeout));
      backend.complete({"p"});
    });
  };
  CHECK(call("/500") == ErrorCode::BackendUnavailable);
  CHECK(call("/missing") == ErrorCode::BackendUnavailable);
  CHECK(call("/504") == ErrorCode::BackendTimeout);
  CHECK(call("/text") == ErrorCode::MalformedResponse);
  CHECK(call("/shape") == ErrorCode::MalformedResponse);
  CHECK(call("/number") == ErrorCode::MalformedResponse);
  CHECK(call("/slow", std::chrono::milliseconds(150)) == ErrorCode::BackendTimeout);
}

TEST_CASE("an unreachable endpoint is BackendUnavailable") {
  HttpBackend backend(config_for("http://127.0.0.1:" + std::to_string(closed_port()) + "/x"));
  CHECK(code_of([&] { backend.complete({"p"}); }) == ErrorCode::BackendUnavailable);
  CHECK(backend.stats().total_calls == 1);
}

TEST_CASE("the vector service returns one vector per token") {
  Json seen;
  LocalServer server([&](httplib::Server& s) {
    s.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
      seen = Json::parse(req.body);
      Json vectors = Json::array();
      for (std::size_t i = 0; i < seen["tokens"].size(); ++i) vectors.push_back({1.0 * static_cast<double>(i), 1.0});
      res.set_content(Json{{"vectors", vectors}}.dump(), "application/json");
    });
    s.Post("/short", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"vectors":[[1,0]]})", "application/json");
    });
    s.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  });
  HttpEmbedder embedder(server.url("/embed"));
  const auto v = embedder.embed({"a", "b", "c"});
  CHECK(seen["tokens"] == Json::array({"a", "b", "c"}));
  REQUIRE(v.size() == 3);
  CHECK(v[2] == eval::Vector{2.0, 1.0});
  CHECK(eval::similarity("a b", "a b", embedder) == doctest::Approx(1.0));
  CHECK(embedder.name() == "http:" + server.url("/embed"));

  CHECK(code_of([&] { HttpEmbedder(server.url("/short")).embed({"a", "b"}); }) == ErrorCode::EmbedderUnavailable);
  CHECK(code_of([&] { HttpEmbedder(server.url("/bad")).embed({"a"}); }) == ErrorCode::EmbedderUnavailable);
  CHECK(code_of([&] { HttpEmbedder(server.url("/nothing")).embed({"a"}); }) == ErrorCode::EmbedderUnavailable);
  const auto dead = "http://127.0.0.1:" + std::to_string(closed_port()) + "/embed";
  CHECK(code_of([&] { HttpEmbedder(dead).embed({"a"}); }) == ErrorCode::EmbedderUnavailable);
}
