#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Byte-oriented text helpers shared by agents and metrics. Case folding is
// ASCII only; bytes >= 0x80 pass through untouched so UTF-8 stays valid.
namespace clarify::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;
bool is_alnum(char c) noexcept;

struct Token {
  std::string text;  // lowercased
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive byte offset

  bool operator==(const Token&) const = default;
};

/// Maximal runs of ASCII alphanumerics, lowercased, with byte offsets into `s`.
/// Identifiers such as "abc123" stay whole.
std::vector<Token> tokenize(std::string_view s);

/// Just the token strings of `tokenize`.
std::vector<std::string> words(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace clarify::text
