#pragma once

#include "edgetag/bench/plan.hpp"
#include "edgetag/bench/report.hpp"
#include "edgetag/engine/engine.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <stop_token>

namespace edgetag::bench {

struct BenchOptions {
  std::filesystem::path reports_root = "reports";
  // Runs after an entry is journaled; an exception here aborts the campaign
  // exactly like a crash at that point would.
  std::function<void(std::size_t index)> after_entry;
  // Event hooks for each entry's engine.
  std::function<engine::EngineHooks(const PlanEntry&)> hooks;
  // Run around each started engine, e.g. to attach the control API.
  std::function<void(engine::Engine&, const PlanEntry&)> on_engine_started;
  std::function<void(const PlanEntry&, const engine::RunSummary&)> on_engine_finished;
  std::stop_token stop;
};

struct CampaignResult {
  std::filesystem::path campaign_dir;
  bool completed = false;  // false when interrupted through `stop`
  std::size_t entries_run = 0;
  std::size_t entries_skipped = 0;  // already journaled by an earlier attempt
  double wall_s = 0.0;
  std::optional<RunReport> report;
};

// Runs the plan's entries in order with idle gaps between them, journaling
// each finished entry under reports_root/<campaign_id>/. Re-running the same
// plan resumes after the last journaled entry. A different plan under an
// existing campaign id is rejected (Errc::config).
CampaignResult execute_plan(const BenchmarkPlan& plan, const BenchOptions& options = {});

std::string entry_run_id(std::size_t index, const PlanEntry& entry);

}  // namespace edgetag::bench
