#include "edgetag/bench/report.hpp"

#include "edgetag/bench/journal.hpp"
#include "edgetag/bench/plan.hpp"
#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"
#include "edgetag/telemetry/csv.hpp"
#include "edgetag/time_util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace edgetag::bench {

namespace {

namespace fs = std::filesystem;

bool ranks_before(const ModelSummary& a, const ModelSummary& b) {
  if (a.latency_mean_ms != b.latency_mean_ms) return a.latency_mean_ms < b.latency_mean_ms;
  if (a.temp_max_c.has_value() != b.temp_max_c.has_value()) return a.temp_max_c.has_value();
  if (a.temp_max_c && *a.temp_max_c != *b.temp_max_c) return *a.temp_max_c < *b.temp_max_c;
  if (a.model_id != b.model_id) return a.model_id < b.model_id;
  return a.entry_index < b.entry_index;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_missing, fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string gap_name(std::size_t before_entry) { return fmt::format("idle/gap-{:02}.csv", before_entry); }

void fill_from_records(EntryReport& report, const std::vector<telemetry::TelemetryRecord>& records,
                       const telemetry::ThermalPolicy& policy) {
  std::vector<double> latency;
  std::vector<double> temps;
  for (const auto& r : records) {
    if (r.inference_ms) latency.push_back(*r.inference_ms);
    if (r.cpu_temp_c) temps.push_back(*r.cpu_temp_c);
  }
  if (!latency.empty()) {
    const auto s = telemetry::summarize(latency);
    report.latency_mean_ms = s.mean;
    report.latency_p95_ms = s.p95;
  }
  if (!temps.empty()) {
    const auto s = telemetry::summarize(temps);
    report.temp_mean_c = s.mean;
    report.temp_max_c = s.max;
  }
  report.buckets = telemetry::aggregate(records);
  report.thermal_events = telemetry::thermal_events(report.buckets, policy);
}

nlohmann::json entry_json(const EntryReport& e) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& ev : e.thermal_events)
    events.push_back({{"bucket_index", ev.bucket_index},
                      {"bucket_start", format_iso8601(ev.bucket_start_ns)},
                      {"direction", telemetry::to_string(ev.direction)},
                      {"max_temp_c", ev.max_temp_c}});
  return {{"index", e.index},
          {"model_id", e.model_id},
          {"scenario", telemetry::to_string(e.scenario)},
          {"status", e.status},
          {"error", e.error},
          {"run_dir", e.run_dir},
          {"raw_csv", e.raw_csv},
          {"agg_csv", e.agg_csv},
          {"predictions", e.predictions},
          {"buckets", e.buckets.size()},
          {"latency_mean_ms", optional_number(e.latency_mean_ms)},
          {"latency_p95_ms", optional_number(e.latency_p95_ms)},
          {"temp_mean_c", optional_number(e.temp_mean_c)},
          {"temp_max_c", optional_number(e.temp_max_c)},
          {"windows_dropped", e.windows_dropped},
          {"backend_failures", e.backend_failures},
          {"stream_gaps", e.stream_gaps},
          {"write_failures", e.write_failures},
          {"thermal_events", std::move(events)}};
}

}  // namespace

std::vector<RankingRow> compare(std::span<const ModelSummary> summaries) {
  if (summaries.size() < 2) throw Error(Errc::config, "compare needs at least two summaries");
  for (const auto& s : summaries)
    if (s.scenario != summaries.front().scenario)
      throw Error(Errc::config, "compare needs summaries from a single scenario");
  std::vector<ModelSummary> sorted(summaries.begin(), summaries.end());
  std::sort(sorted.begin(), sorted.end(), ranks_before);
  std::vector<RankingRow> rows;
  for (std::size_t i = 0; i < sorted.size(); ++i) rows.push_back({i + 1, std::move(sorted[i])});
  return rows;
}

RunReport build_report(const fs::path& campaign_dir) {
  const auto plan_path = campaign_dir / "plan.json";
  if (!fs::exists(plan_path)) throw Error(Errc::file_missing, fmt::format("no plan.json in {}", campaign_dir.string()));
  RunReport report;
  report.plan = nlohmann::json::parse(read_text(plan_path), nullptr, false);
  if (report.plan.is_discarded()) throw Error(Errc::io, fmt::format("{} is not valid JSON", plan_path.string()));
  const auto plan = plan_from_json(report.plan, campaign_dir);
  report.campaign_id = plan.campaign_id;

  std::map<std::size_t, JournalEntry> journal;
  for (auto& j : read_journal(campaign_dir / "journal.jsonl")) journal[j.index] = std::move(j);

  std::map<std::string, std::vector<ModelSummary>> by_scenario;
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& planned = plan.entries[i];
    EntryReport e;
    e.index = i;
    e.model_id = planned.manifest.model_id;
    e.scenario = planned.scenario;
    e.status = "pending";
    if (const auto it = journal.find(i); it != journal.end()) {
      const auto& j = it->second;
      e.status = j.status;
      e.error = j.error;
      e.run_dir = j.run_dir;
      if (j.run_summary.is_object()) {
        e.predictions = j.run_summary.value("predictions", std::int64_t{0});
        const auto counters = j.run_summary.value("counters", nlohmann::json::object());
        e.windows_dropped = counters.value("windows_dropped", std::int64_t{0});
        e.backend_failures = counters.value("backend_failures", std::int64_t{0});
        e.stream_gaps = counters.value("stream_gaps", std::int64_t{0});
        e.write_failures = counters.value("write_failures", std::int64_t{0});
      }
      if (!e.run_dir.empty() && fs::exists(campaign_dir / e.run_dir / "telemetry_raw.csv")) {
        e.raw_csv = (fs::path(e.run_dir) / "telemetry_raw.csv").generic_string();
        e.agg_csv = (fs::path(e.run_dir) / "telemetry_agg.csv").generic_string();
        fill_from_records(e, telemetry::read_raw_csv(campaign_dir / e.raw_csv), plan.thermal_policy);
      }
    }
    if (e.status == "completed" && e.latency_mean_ms)
      by_scenario[telemetry::to_string(e.scenario)].push_back(
          {e.index, e.model_id, e.scenario, *e.latency_mean_ms, e.temp_max_c});
    report.entries.push_back(std::move(e));
  }

  for (std::size_t i = 1; i < plan.entries.size(); ++i) {
    const auto rel = gap_name(i);
    if (!fs::exists(campaign_dir / rel)) continue;
    IdleGapReport gap;
    gap.before_entry = i;
    gap.csv = rel;
    const auto records = telemetry::read_raw_csv(campaign_dir / rel);
    gap.samples = records.size();
    for (const auto& r : records) {
      if (!r.cpu_temp_c) continue;
      if (!gap.temp_first_c) gap.temp_first_c = r.cpu_temp_c;
      gap.temp_last_c = r.cpu_temp_c;
    }
    report.idle_gaps.push_back(std::move(gap));
  }

  for (const auto& [scenario, summaries] : by_scenario)
    if (summaries.size() >= 2) report.rankings[scenario] = compare(summaries);
  return report;
}

std::string report_json(const RunReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) entries.push_back(entry_json(e));
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : report.idle_gaps)
    gaps.push_back({{"before_entry", g.before_entry},
                    {"csv", g.csv},
                    {"samples", g.samples},
                    {"temp_first_c", optional_number(g.temp_first_c)},
                    {"temp_last_c", optional_number(g.temp_last_c)}});
  nlohmann::json rankings = nlohmann::json::object();
  for (const auto& [scenario, rows] : report.rankings) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : rows)
      list.push_back({{"rank", r.rank},
                      {"entry", r.summary.entry_index},
                      {"model_id", r.summary.model_id},
                      {"latency_mean_ms", r.summary.latency_mean_ms},
                      {"temp_max_c", optional_number(r.summary.temp_max_c)}});
    rankings[scenario] = std::move(list);
  }
  const nlohmann::json doc{{"campaign_id", report.campaign_id},
                           {"entries", std::move(entries)},
                           {"idle_gaps", std::move(gaps)},
                           {"rankings", std::move(rankings)}};
  return doc.dump(2) + "\n";
}

std::string ranking_csv(const RunReport& report) {
  std::string out = std::string(kRankingCsvHeader) + "\n";
  for (const auto& [scenario, rows] : report.rankings)
    for (const auto& r : rows)
      out += fmt::format("{},{},{},{},{},{}\n", scenario, r.rank, r.summary.entry_index,
                         telemetry::csv_escape(r.summary.model_id), format_double(r.summary.latency_mean_ms),
                         optional_text(r.summary.temp_max_c));
  return out;
}

RunReport write_report(const fs::path& campaign_dir) {
  auto report = build_report(campaign_dir);
  for (const auto& e : report.entries)
    if (!e.agg_csv.empty()) write_file_atomic(campaign_dir / e.agg_csv, telemetry::agg_csv(e.buckets));
  write_file_atomic(campaign_dir / "summary.json", report_json(report));
  write_file_atomic(campaign_dir / "ranking.csv", ranking_csv(report));
  return report;
}

}  // namespace edgetag::bench
