#pragma once

#include <chrono>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "clarify/codec.hpp"
#include "clarify/orchestrator.hpp"

namespace clarify::detail {

/// Times pipeline stages and, when a sink is configured, writes one JSON line
/// per stage: {"trace_id", "pipeline", "stage", "elapsed_ms", "warnings"}.
class StageTracer {
 public:
  StageTracer(const PipelineConfig& config, std::string pipeline, PipelineOutcome& outcome)
      : config_(config), pipeline_(std::move(pipeline)), outcome_(outcome), start_(Clock::now()) {}

  /// Closes the current stage; `warnings` are appended to the outcome.
  void finish(const std::string& stage, std::vector<std::string> warnings = {}) {
    const auto now = Clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    outcome_.stages.push_back(StageTiming{stage, ms});
    if (config_.trace) {
      Json line{{"trace_id", config_.trace_id},
                {"pipeline", pipeline_},
                {"stage", stage},
                {"elapsed_ms", ms},
                {"warnings", warnings}};
      static std::mutex mu;
      std::lock_guard lock(mu);
      *config_.trace << line.dump() << '\n';
    }
    for (auto& w : warnings) outcome_.warnings.push_back(std::move(w));
  }

 private:
  using Clock = std::chrono::steady_clock;
  const PipelineConfig& config_;
  std::string pipeline_;
  PipelineOutcome& outcome_;
  Clock::time_point start_;
};

}  // namespace clarify::detail
