#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "clarify/agents.hpp"
#include "clarify/domain.hpp"
#include "clarify/error.hpp"
#include "clarify/knowledge_store.hpp"
#include "clarify/llm_backend.hpp"

#ifndef CLARIFY_TEST_DATA_DIR
#error "CLARIFY_TEST_DATA_DIR must point at tests/"
#endif

namespace clarify::testing {

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(CLARIFY_TEST_DATA_DIR) / relative;
}

inline StoreSnapshot fixture_store() {
  return std::make_shared<const KnowledgeStore>(KnowledgeStore::load(data_path("fixtures/store.json")));
}

inline RuleTable fixture_rules() { return load_mock_rules(data_path("fixtures/mock_rules.json")); }

inline Query query_of(const std::string& text, const std::string& session = "s1") {
  return validate_query(text, session, Timestamp{});
}

inline AgentContext context_of(const std::string& text, StoreSnapshot store, std::vector<ChatTurn> history = {}) {
  return AgentContext{query_of(text), std::move(history), std::move(store)};
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("clarify_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
             std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

}  // namespace clarify::testing
