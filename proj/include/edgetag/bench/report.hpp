#pragma once

#include "edgetag/telemetry/aggregate.hpp"
#include "edgetag/telemetry/record.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgetag::bench {

/// Comparable figures for one model run.
struct ModelSummary {
  std::size_t entry_index = 0;
  std::string model_id;
  telemetry::Scenario scenario = telemetry::Scenario::headless;
  double latency_mean_ms = 0.0;
  std::optional<double> temp_max_c;
};

struct RankingRow {
  std::size_t rank = 0;
  ModelSummary summary;
};

// Orders by mean latency, then max temperature (missing last), then model
// id and entry index. Requires >= 2 summaries sharing one scenario
// (Errc::config otherwise).
std::vector<RankingRow> compare(std::span<const ModelSummary> summaries);

struct EntryReport {
  std::size_t index = 0;
  std::string model_id;
  telemetry::Scenario scenario = telemetry::Scenario::headless;
  std::string status;  // "completed", "failed" or "pending"
  std::string error;
  std::string run_dir;
  std::string raw_csv;
  std::string agg_csv;
  std::int64_t predictions = 0;
  std::optional<double> latency_mean_ms;
  std::optional<double> latency_p95_ms;
  std::optional<double> temp_mean_c;
  std::optional<double> temp_max_c;
  std::int64_t windows_dropped = 0;
  std::int64_t backend_failures = 0;
  std::int64_t stream_gaps = 0;
  std::int64_t write_failures = 0;
  std::vector<telemetry::ThermalEvent> thermal_events;
  std::vector<telemetry::AggBucket> buckets;
};

struct IdleGapReport {
  std::size_t before_entry = 0;
  std::string csv;
  std::size_t samples = 0;
  std::optional<double> temp_first_c;
  std::optional<double> temp_last_c;
};

struct RunReport {
  std::string campaign_id;
  nlohmann::json plan;
  std::vector<EntryReport> entries;
  std::vector<IdleGapReport> idle_gaps;
  std::map<std::string, std::vector<RankingRow>> rankings;  // by scenario
};

// Rebuilds the report from the campaign directory's plan.json, journal and
// raw telemetry CSVs only, so regenerating it is deterministic.
RunReport build_report(const std::filesystem::path& campaign_dir);
std::string report_json(const RunReport& report);
std::string ranking_csv(const RunReport& report);
// Writes summary.json, ranking.csv and every entry's aggregate CSV
// atomically; returns the report.
RunReport write_report(const std::filesystem::path& campaign_dir);

inline constexpr const char* kRankingCsvHeader = "scenario,rank,entry,model_id,latency_mean_ms,temp_max_c";

}  // namespace edgetag::bench
