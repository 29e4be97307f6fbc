#include <algorithm>

#include "clarify/agents.hpp"
#include "clarify/error.hpp"

namespace clarify {

Agent::Agent(AgentDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  if (descriptor_.agent_id.empty()) fail(ErrorCode::InvalidArgument, "agent_id must not be empty");
  if (descriptor_.description.empty()) {
    fail(ErrorCode::InvalidArgument, "agent '" + descriptor_.agent_id + "' needs a description");
  }
  if (descriptor_.timeout.count() <= 0) {
    fail(ErrorCode::InvalidArgument, "agent '" + descriptor_.agent_id + "' timeout must be positive");
  }
}

AgentReport Agent::nothing_found(std::vector<ConceptDefinition> grounding, std::string detail) const {
  return AgentReport::clear(descriptor_.agent_id, descriptor_.description, std::move(grounding), std::move(detail));
}

void AgentRegistry::add(AgentPtr agent) {
  if (!agent) fail(ErrorCode::InvalidArgument, "null agent");
  if (find(agent->id())) fail(ErrorCode::DuplicateKey, "agent '" + agent->id() + "' already registered");
  agents_.push_back(std::move(agent));
}

std::vector<AgentPtr> AgentRegistry::enabled() const {
  std::vector<AgentPtr> out;
  std::copy_if(agents_.begin(), agents_.end(), std::back_inserter(out),
               [](const AgentPtr& a) { return a->descriptor().enabled; });
  return out;
}

const Agent* AgentRegistry::find(std::string_view agent_id) const {
  for (const auto& a : agents_) {
    if (a->id() == agent_id) return a.get();
  }
  return nullptr;
}

}  // namespace clarify
