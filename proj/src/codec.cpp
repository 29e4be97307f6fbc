#include "clarify/codec.hpp"

namespace clarify {

namespace {

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

Json parse_json(const std::string& text, const std::string& context) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ParseError, (context.empty() ? std::string() : context + ": ") + e.what());
  }
}

void to_json(Json& j, AmbiguityType v) { j = std::string(to_string(v)); }
void from_json(const Json& j, AmbiguityType& v) { v = parse_ambiguity_type(j.get<std::string>()); }
void to_json(Json& j, ChatRole v) { j = std::string(to_string(v)); }
void from_json(const Json& j, ChatRole& v) { v = parse_chat_role(j.get<std::string>()); }
void to_json(Json& j, SurfaceMode v) { j = std::string(to_string(v)); }
void from_json(const Json& j, SurfaceMode& v) { v = parse_surface_mode(j.get<std::string>()); }

void to_json(Json& j, const Query& v) {
  j = Json{{"text", v.text}, {"session_id", v.session_id}, {"received_at", format_timestamp(v.received_at)}};
}

void from_json(const Json& j, Query& v) {
  v.text = j.at("text").get<std::string>();
  v.session_id = j.at("session_id").get<std::string>();
  auto ts = optional_field<std::string>(j, "received_at");
  v.received_at = ts ? parse_timestamp(*ts) : Timestamp{};
}

void to_json(Json& j, const ChatTurn& v) {
  j = Json{{"role", v.role}, {"text", v.text}, {"index", v.index}};
}

void from_json(const Json& j, ChatTurn& v) {
  v.role = j.at("role").get<ChatRole>();
  v.text = j.at("text").get<std::string>();
  v.index = j.at("index").get<std::size_t>();
}

void to_json(Json& j, const ByteSpan& v) { j = Json{{"start", v.start}, {"end", v.end}}; }

void from_json(const Json& j, ByteSpan& v) {
  v.start = j.at("start").get<std::size_t>();
  v.end = j.at("end").get<std::size_t>();
}

void to_json(Json& j, const MatchCandidate& v) {
  j = Json{{"surface_span", v.surface_span}, {"label", v.label}, {"kind", v.kind}, {"ref_id", v.ref_id}};
}

void from_json(const Json& j, MatchCandidate& v) {
  v.surface_span = j.at("surface_span").get<ByteSpan>();
  v.label = j.at("label").get<std::string>();
  v.kind = j.at("kind").get<std::string>();
  v.ref_id = j.at("ref_id").get<std::string>();
}

void to_json(Json& j, const ConceptDefinition& v) {
  j = Json{{"term", v.term}, {"definition", v.definition}, {"keywords", v.keywords}};
}

void from_json(const Json& j, ConceptDefinition& v) {
  v.term = j.at("term").get<std::string>();
  v.definition = j.at("definition").get<std::string>();
  v.keywords = j.value("keywords", std::vector<std::string>{});
}

void to_json(Json& j, const LlmDecision& v) {
  j = Json{{"ambiguous", v.ambiguous()},
           {"clarification_question", v.clarification_question() ? Json(*v.clarification_question()) : Json(nullptr)},
           {"referenced_agent_ids", v.referenced_agent_ids()}};
}

void from_json(const Json& j, LlmDecision& v) {
  v = LlmDecision(j.at("ambiguous").get<bool>(), optional_field<std::string>(j, "clarification_question"),
                  j.value("referenced_agent_ids", std::vector<std::string>{}));
}

void to_json(Json& j, const OptionPayload& v) { j = Json{{"ref_id", v.ref_id}, {"kind", v.kind}}; }

void from_json(const Json& j, OptionPayload& v) {
  v.ref_id = j.at("ref_id").get<std::string>();
  v.kind = j.at("kind").get<std::string>();
}

void to_json(Json& j, const ClarificationOption& v) {
  j = Json{{"option_id", v.option_id}, {"label", v.label}, {"payload", v.payload}};
}

void from_json(const Json& j, ClarificationOption& v) {
  v.option_id = j.at("option_id").get<std::string>();
  v.label = j.at("label").get<std::string>();
  v.payload = j.at("payload").get<OptionPayload>();
}

void to_json(Json& j, const DisambiguationResult& v) {
  j = Json{{"decision", v.decision},
           {"options", v.options},
           {"surface_mode", v.surface_mode},
           {"llm_calls_used", v.llm_calls_used},
           {"agent_reports", v.agent_reports}};
}

void from_json(const Json& j, DisambiguationResult& v) {
  v.decision = j.at("decision").get<LlmDecision>();
  v.options = j.at("options").get<std::vector<ClarificationOption>>();
  v.surface_mode = j.at("surface_mode").get<SurfaceMode>();
  v.llm_calls_used = j.at("llm_calls_used").get<std::size_t>();
  v.agent_reports = j.at("agent_reports").get<std::vector<AgentReport>>();
}

}  // namespace clarify

namespace nlohmann {

void adl_serializer<clarify::AgentReport>::to_json(json& j, const clarify::AgentReport& v) {
  j = json{{"agent_id", v.agent_id()},
           {"agent_description", v.agent_description()},
           {"ambiguity_detected", v.ambiguity_detected()},
           {"ambiguity_type", v.ambiguity_type() ? json(*v.ambiguity_type()) : json(nullptr)},
           {"detail", v.detail()},
           {"matches", v.matches()},
           {"grounding", v.grounding()}};
}

clarify::AgentReport adl_serializer<clarify::AgentReport>::from_json(const json& j) {
  std::optional<clarify::AmbiguityType> type;
  if (auto it = j.find("ambiguity_type"); it != j.end() && !it->is_null()) type = it->get<clarify::AmbiguityType>();
  return clarify::AgentReport(j.at("agent_id").get<std::string>(), j.at("agent_description").get<std::string>(),
                              j.at("ambiguity_detected").get<bool>(), type, j.value("detail", std::string{}),
                              j.value("matches", std::vector<clarify::MatchCandidate>{}),
                              j.value("grounding", std::vector<clarify::ConceptDefinition>{}));
}

}  // namespace nlohmann
