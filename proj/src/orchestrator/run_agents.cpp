#include <chrono>
#include <future>
#include <memory>
#include <thread>

#include "clarify/orchestrator.hpp"

namespace clarify {

namespace {

// Checks what the agent handed back before it reaches the prompt.
std::optional<AgentWarning> check_report(const Agent& agent, const AgentReport& report, const Query& query) {
  if (report.agent_id() != agent.id()) {
    return AgentWarning{agent.id(), ErrorCode::AgentFailure, "report carries foreign agent_id '" + report.agent_id() + "'"};
  }
  try {
    report.check_spans(query.text);
  } catch (const Error& e) {
    return AgentWarning{agent.id(), ErrorCode::AgentFailure, e.what()};
  }
  return std::nullopt;
}

AgentWarning failure_of(const Agent& agent, std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return AgentWarning{agent.id(), ErrorCode::AgentFailure, std::string("agent failed: ") + e.what()};
  } catch (...) {
    return AgentWarning{agent.id(), ErrorCode::AgentFailure, "agent failed with a non-standard exception"};
  }
}

AgentWarning timeout_of(const Agent& agent) {
  return AgentWarning{agent.id(), ErrorCode::AgentTimeout,
                      "agent timed out after " + std::to_string(agent.descriptor().timeout.count()) + " ms"};
}

}  // namespace

AgentRun run_agents(const AgentContext& ctx, const AgentRegistry& registry, ExecutionMode mode) {
  AgentRun run;
  const auto agents = registry.enabled();
  if (agents.empty()) return run;

  auto accept = [&](const Agent& agent, AgentReport report) {
    if (auto w = check_report(agent, report, ctx.query)) {
      run.warnings.push_back(std::move(*w));
    } else {
      run.reports.push_back(std::move(report));
    }
  };

  if (mode == ExecutionMode::Sequential) {
    for (const auto& agent : agents) {
      const auto start = std::chrono::steady_clock::now();
      try {
        auto report = agent->detect(ctx);
        if (std::chrono::steady_clock::now() - start > agent->descriptor().timeout) {
          run.warnings.push_back(timeout_of(*agent));
          continue;
        }
        accept(*agent, std::move(report));
      } catch (...) {
        run.warnings.push_back(failure_of(*agent, std::current_exception()));
      }
    }
    return run;
  }

  // One detached worker per agent. A worker that outlives its timeout keeps
  // only shared state alive, so abandoning it is safe.
  auto shared_ctx = std::make_shared<const AgentContext>(ctx);
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::future<AgentReport>> futures;
  futures.reserve(agents.size());
  for (const auto& agent : agents) {
    auto promise = std::make_shared<std::promise<AgentReport>>();
    futures.push_back(promise->get_future());
    try {
      std::thread([agent, shared_ctx, promise] {
        try {
          promise->set_value(agent->detect(*shared_ctx));
        } catch (...) {
          promise->set_exception(std::current_exception());
        }
      }).detach();
    } catch (const std::system_error& e) {
      promise->set_exception(std::make_exception_ptr(e));
    }
  }

  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& agent = *agents[i];
    if (futures[i].wait_until(start + agent.descriptor().timeout) != std::future_status::ready) {
      run.warnings.push_back(timeout_of(agent));
      continue;
    }
    try {
      accept(agent, futures[i].get());
    } catch (...) {
      run.warnings.push_back(failure_of(agent, std::current_exception()));
    }
  }
  return run;
}

}  // namespace clarify
