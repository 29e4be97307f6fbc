#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <atomic>
#include <thread>

#include "clarify/knowledge_store.hpp"
#include "clarify/text.hpp"
#include "support.hpp"

using namespace clarify;
using clarify::testing::data_path;

namespace {

ErrorCode load_error(const std::string& text) {
  try {
    KnowledgeStore::from_json_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

std::string error_message(const std::string& text) {
  try {
    KnowledgeStore::from_json_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("fixture store loads with its counts") {
  const auto store = KnowledgeStore::load(data_path("fixtures/store.json"));
  CHECK(store.entities().size() == 6);
  CHECK(store.products().size() == 3);
  CHECK(store.concepts().size() == 10);
  CHECK(store.max_entity_name_tokens() == 2);
  CHECK(store.max_concept_term_tokens() == 2);
}

TEST_CASE("lookup_name is case-insensitive and ordered by kind then ref id") {
  const auto store = KnowledgeStore::load(data_path("fixtures/store.json"));
  const auto hits = store.lookup_name("TEST");
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].kind == "dataset");
  CHECK(hits[1].kind == "segment");
  CHECK(store.lookup_name("tEsT") == hits);
  CHECK(store.lookup_name("test") == hits);
  CHECK(store.lookup_name("nothing here").empty());
  CHECK(store.lookup_name("loyalty members").size() == 1);
}

TEST_CASE("lookup order matches a sort oracle and every entity finds itself") {
  const auto store = KnowledgeStore::load(data_path("fixtures/store.json"));
  for (const auto& e : store.entities()) {
    auto expected = store.entities();
    expected.erase(std::remove_if(expected.begin(), expected.end(),
                                  [&](const Entity& x) { return text::to_lower(x.name) != text::to_lower(e.name); }),
                   expected.end());
    std::sort(expected.begin(), expected.end(),
              [](const Entity& a, const Entity& b) { return std::tie(a.kind, a.ref_id) < std::tie(b.kind, b.ref_id); });
    const auto got = store.lookup_name(e.name);
    CHECK(got == expected);
    CHECK(std::find(got.begin(), got.end(), e) != got.end());
    CHECK(store.lookup_name(text::to_lower(e.name)) == got);
  }
}

TEST_CASE("resolve_ref covers entities and products") {
  const auto store = KnowledgeStore::load(data_path("fixtures/store.json"));
  CHECK(std::get<Entity>(store.resolve_ref("ds_test")).kind == "dataset");
  CHECK(std::get<ProductEntry>(store.resolve_ref("commerce")).display_name == "Adobe Commerce");
  try {
    store.resolve_ref("missing");
    FAIL("expected UnknownRef");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownRef);
  }
}

TEST_CASE("empty store file loads as an empty store") {
  const auto s = KnowledgeStore::from_json_text(R"({"entities":[],"products":[],"concepts":[]})");
  CHECK(s.entities().empty());
  CHECK(s.products().empty());
  CHECK(s.concepts().empty());
  CHECK(s.max_entity_name_tokens() == 0);
}

TEST_CASE("store invariants are enforced on load") {
  CHECK(load_error(R"({"entities":[{"ref_id":"a","name":"X","kind":"segment"},
                                    {"ref_id":"b","name":"x","kind":"segment"}],"products":[],"concepts":[]})") ==
        ErrorCode::DuplicateKey);
  CHECK(load_error(R"({"entities":[{"ref_id":"a","name":"X","kind":"segment"},
                                    {"ref_id":"a","name":"Y","kind":"segment"}],"products":[],"concepts":[]})") ==
        ErrorCode::DuplicateKey);
  CHECK(load_error(R"({"entities":[{"ref_id":"a","name":"X","kind":"segment"}],
                       "products":[{"product_id":"a","display_name":"P","keywords":["k"]}],"concepts":[]})") ==
        ErrorCode::DuplicateKey);
  CHECK(load_error(R"({"entities":[],"products":[{"product_id":"p","display_name":"P","keywords":["k"]},
                       {"product_id":"q","display_name":"P","keywords":["k"]}],"concepts":[]})") ==
        ErrorCode::DuplicateKey);
  CHECK(load_error(R"({"entities":[],"products":[{"product_id":"p","display_name":"P","keywords":[]}],
                       "concepts":[]})") == ErrorCode::ParseError);
  CHECK(load_error(R"({"entities":[],"products":[],"concepts":[{"term":"Schema","definition":"a"},
                       {"term":"schema","definition":"b"}]})") == ErrorCode::DuplicateKey);
}

TEST_CASE("parse errors name the line or the field path") {
  CHECK(load_error("{\n\"entities\": [\n,]}") == ErrorCode::ParseError);
  CHECK(error_message("{\n\"entities\": [\n,]}").find("line 3") != std::string::npos);
  CHECK(error_message(R"({"entities":[{"ref_id":"a","name":"X","kind":7}],"products":[],"concepts":[]})")
            .find("entities[0].kind") != std::string::npos);
  CHECK(load_error("[]") == ErrorCode::ParseError);
  CHECK(load_error(R"({"rules":[]})") == ErrorCode::ParseError);
  CHECK(KnowledgeStore::from_json_text("{}").entities().empty());
}

TEST_CASE("product keywords are normalized to lowercase tokens and concept terms to lowercase keys") {
  const auto s = KnowledgeStore::from_json_text(
      R"({"entities":[],"products":[{"product_id":"p","display_name":"P","keywords":["Cart","cart","AEM"]}],
          "concepts":[{"term":"Data Lake","definition":"d","keywords":["Storage"]}]})");
  CHECK(s.products()[0].keywords == std::vector<std::string>{"cart", "aem"});
  REQUIRE(s.concepts().count("data lake") == 1);
  CHECK(s.concepts().at("data lake").keywords == std::vector<std::string>{"storage"});
}

TEST_CASE("loading is a pure function of the file bytes") {
  const auto a = KnowledgeStore::load(data_path("fixtures/store.json"));
  const auto b = KnowledgeStore::load(data_path("fixtures/store.json"));
  CHECK(a == b);
  CHECK(a.entities() == b.entities());
}

TEST_CASE("multi-token product keywords are rejected") {
  CHECK(load_error(R"({"entities":[],"products":[{"product_id":"p","display_name":"P","keywords":["two words"]}],
                       "concepts":[]})") == ErrorCode::ParseError);
}

TEST_CASE("store handle snapshots stay valid across concurrent reloads") {
  clarify::testing::TempDir dir("store");
  const auto path = dir.path() / "store.json";
  auto write = [&](const std::string& name) {
    std::ofstream(path) << R"({"entities":[{"ref_id":"e","name":")" << name
                        << R"(","kind":"dataset"}],"products":[],"concepts":[]})";
  };
  write("first");
  StoreHandle handle;
  handle.reload(path);
  const auto before = handle.snapshot();

  std::atomic<bool> done{false};
  std::atomic<int> inconsistent{0};
  std::thread reader([&] {
    while (!done) {
      const auto snap = handle.snapshot();
      const auto& name = snap->entities().at(0).name;
      if (snap->lookup_name(name).size() != 1) ++inconsistent;
    }
  });
  for (int i = 0; i < 50; ++i) {
    const auto next = std::make_shared<const KnowledgeStore>(KnowledgeStore::from_json_text(
        R"({"entities":[{"ref_id":"e","name":"n)" + std::to_string(i) +
        R"(","kind":"dataset"}],"products":[],"concepts":[]})"));
    handle.replace(next);
  }
  write("second");
  handle.reload(path);
  done = true;
  reader.join();

  CHECK(inconsistent == 0);
  CHECK(before->entities().at(0).name == "first");
  CHECK(handle.snapshot()->entities().at(0).name == "second");
}

TEST_CASE("a failed reload keeps the current store") {
  clarify::testing::TempDir dir("store_bad");
  const auto path = dir.path() / "store.json";
  std::ofstream(path) << "{ broken";
  StoreHandle handle(std::make_shared<const KnowledgeStore>(
      KnowledgeStore::load(data_path("fixtures/store.json"))));
  CHECK_THROWS_AS(handle.reload(path), Error);
  CHECK(handle.snapshot()->entities().size() == 6);
}
