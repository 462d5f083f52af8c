#pragma once

#include "edgetag/audio/source.hpp"
#include "edgetag/audio/types.hpp"
#include "edgetag/inference/manifest.hpp"
#include "edgetag/telemetry/aggregate.hpp"
#include "edgetag/telemetry/record.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace edgetag::bench {

// durations: time_scale shortens run and idle durations only; the engine
// processes audio in real time. stream: the synthetic/file audio clock is
// compressed as well, so a full-length run plays out in scaled wall time.
enum class ClockMode { durations, stream };

std::string to_string(ClockMode mode);
ClockMode parse_clock_mode(const std::string& text);

struct PlanEntry {
  inference::ModelManifest manifest;
  double run_duration_s = 86400.0;
  telemetry::Scenario scenario = telemetry::Scenario::headless;
  double inference_delay_s = 0.0;
};

struct BenchmarkPlan {
  std::string campaign_id;
  std::vector<PlanEntry> entries;
  double idle_between_s = 3600.0;
  double time_scale = 1.0;
  ClockMode clock_mode = ClockMode::durations;
  // Stream seconds between idle-gap temperature samples; 0 disables them.
  double idle_sample_period_s = 60.0;
  std::string temperature_source = "sysfs";
  telemetry::ThermalPolicy thermal_policy;
  audio::SourceConfig source;
  audio::WindowSpec window;
  std::size_t predict_queue_capacity = 2;

  // Throws Error(Errc::config).
  void validate() const;
  // Scheduled wall time: scaled runs plus scaled idle gaps between them.
  double scheduled_wall_s() const;
  // Stream seconds and engine time scale for one entry under the clock mode.
  double engine_duration_s(const PlanEntry& entry) const;
  double engine_time_scale() const;
};

// Reads a TOML or JSON plan; manifest paths resolve against the plan's
// directory. Errors: file_missing, config, manifest_invalid.
BenchmarkPlan load_plan(const std::filesystem::path& path);
BenchmarkPlan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
// Canonical form with absolute manifest paths; re-parses to the same plan.
nlohmann::json plan_to_json(const BenchmarkPlan& plan);

}  // namespace edgetag::bench
