#pragma once

// Canonical JSON encoding of the domain types (snake_case field names, absent
// optionals encoded as null). This is both the HTTP wire format and the test
// fixture format.

#include <json.hpp>
#include <string>

#include "clarify/domain.hpp"
#include "clarify/error.hpp"

namespace clarify {

using Json = nlohmann::json;

void to_json(Json& j, const Query& v);
void from_json(const Json& j, Query& v);
void to_json(Json& j, const ChatTurn& v);
void from_json(const Json& j, ChatTurn& v);
void to_json(Json& j, const ByteSpan& v);
void from_json(const Json& j, ByteSpan& v);
void to_json(Json& j, const MatchCandidate& v);
void from_json(const Json& j, MatchCandidate& v);
void to_json(Json& j, const ConceptDefinition& v);
void from_json(const Json& j, ConceptDefinition& v);
void to_json(Json& j, const LlmDecision& v);
void from_json(const Json& j, LlmDecision& v);
void to_json(Json& j, const OptionPayload& v);
void from_json(const Json& j, OptionPayload& v);
void to_json(Json& j, const ClarificationOption& v);
void from_json(const Json& j, ClarificationOption& v);
void to_json(Json& j, const DisambiguationResult& v);
void from_json(const Json& j, DisambiguationResult& v);
void to_json(Json& j, AmbiguityType v);
void from_json(const Json& j, AmbiguityType& v);
void to_json(Json& j, ChatRole v);
void from_json(const Json& j, ChatRole& v);
void to_json(Json& j, SurfaceMode v);
void from_json(const Json& j, SurfaceMode& v);

/// Converts a JSON value to T, rethrowing library errors as ParseError with
/// `context` prefixed to the message.
template <typename T>
T decode(const Json& j, const std::string& context = {}) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, (context.empty() ? std::string() : context + ": ") + e.what());
  }
}

/// Parses text as JSON, mapping syntax errors to ParseError.
Json parse_json(const std::string& text, const std::string& context = {});

}  // namespace clarify

namespace nlohmann {
template <>
struct adl_serializer<clarify::AgentReport> {
  static void to_json(json& j, const clarify::AgentReport& v);
  static clarify::AgentReport from_json(const json& j);
};
}  // namespace nlohmann
