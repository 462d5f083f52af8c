#include "edgetag/bench/harness.hpp"

#include "edgetag/bench/journal.hpp"
#include "edgetag/engine/engine.hpp"
#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"
#include "edgetag/telemetry/csv.hpp"
#include "edgetag/telemetry/temperature.hpp"
#include "edgetag/time_util.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

namespace edgetag::bench {

namespace {

namespace fs = std::filesystem;

std::string safe_component(const std::string& text) {
  std::string out;
  for (char c : text)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

// Sleeps up to `seconds`; returns false when stop was requested.
bool sleep_for(double seconds, std::stop_token stop) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  const auto deadline = SteadyClock::now() + std::chrono::duration_cast<SteadyClock::duration>(
                                                 std::chrono::duration<double>(std::max(0.0, seconds)));
  return !cv.wait_until(lock, stop, deadline, [] { return false; });
}

void persist_plan(const BenchmarkPlan& plan, const fs::path& campaign_dir) {
  const auto doc = plan_to_json(plan);
  const auto path = campaign_dir / "plan.json";
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto existing = nlohmann::json::parse(buffer.str(), nullptr, false);
    if (existing != doc)
      throw Error(Errc::config, fmt::format("campaign '{}' already exists with a different plan ({})", plan.campaign_id,
                                            path.string()));
    return;
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

// Engine stopped; optional low-cadence temperature samples into idle/gap-NN.csv.
bool idle_gap(const BenchmarkPlan& plan, std::size_t before_entry, const fs::path& campaign_dir,
              const PlanEntry& next, std::stop_token stop) {
  const double wall_s = plan.idle_between_s * plan.time_scale;
  const double period_s = plan.idle_sample_period_s * plan.time_scale;
  spdlog::info("idle gap before entry {}: {:.1f} s", before_entry, wall_s);
  if (wall_s <= 0.0) return true;
  if (period_s <= 0.0) return sleep_for(wall_s, stop);

  telemetry::TemperatureMonitor monitor(telemetry::make_temperature_source(plan.temperature_source));
  const auto path = campaign_dir / fmt::format("idle/gap-{:02}.csv", before_entry);
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, fmt::format("cannot write {}", path.string()));
  out << telemetry::kRawCsvHeader << "\n";

  const auto start = SteadyClock::now();
  for (std::size_t n = 0;; ++n) {
    const double at = static_cast<double>(n) * period_s;
    if (at >= wall_s) break;
    const double elapsed = std::chrono::duration<double>(SteadyClock::now() - start).count();
    if (!sleep_for(at - elapsed, stop)) return false;
    telemetry::TelemetryRecord r;
    r.wall_time_ns = to_ns(SystemClock::now());
    r.model_id = "idle";
    r.scenario = next.scenario;
    r.cpu_temp_c = monitor.sample();
    out << telemetry::raw_csv_row(r) << "\n";
    out.flush();
  }
  const double elapsed = std::chrono::duration<double>(SteadyClock::now() - start).count();
  return sleep_for(wall_s - elapsed, stop);
}

engine::EngineConfig entry_config(const BenchmarkPlan& plan, std::size_t index, const PlanEntry& entry,
                                  const fs::path& campaign_dir) {
  engine::EngineConfig cfg;
  cfg.window_spec = plan.window;
  cfg.manifest = entry.manifest;
  cfg.source = plan.source;
  cfg.scenario = entry.scenario;
  cfg.predict_queue_capacity = plan.predict_queue_capacity;
  cfg.time_scale = plan.engine_time_scale();
  cfg.duration_s = plan.engine_duration_s(entry);
  cfg.inference_delay_s = entry.inference_delay_s;
  cfg.temperature_source = plan.temperature_source;
  cfg.thermal_policy = plan.thermal_policy;
  cfg.output_dir = campaign_dir / "entries";
  cfg.recordings_dir = campaign_dir / "recordings";
  cfg.run_id = entry_run_id(index, entry);
  return cfg;
}

}  // namespace

std::string entry_run_id(std::size_t index, const PlanEntry& entry) {
  return fmt::format("{:02}-{}-{}", index, safe_component(entry.manifest.model_id),
                     telemetry::to_string(entry.scenario));
}

CampaignResult execute_plan(const BenchmarkPlan& plan, const BenchOptions& options) {
  plan.validate();
  for (std::size_t i = 0; i < plan.entries.size(); ++i)
    if (plan.entries[i].manifest.source.empty())
      throw Error(Errc::config, fmt::format("entry {}: manifest must be loaded from a file", i));

  const auto wall_begin = SteadyClock::now();
  CampaignResult result;
  result.campaign_dir = options.reports_root / plan.campaign_id;
  fs::create_directories(result.campaign_dir);
  persist_plan(plan, result.campaign_dir);

  const auto journal_path = result.campaign_dir / "journal.jsonl";
  std::set<std::size_t> done;
  for (const auto& j : read_journal(journal_path)) done.insert(j.index);
  if (!done.empty()) spdlog::info("resuming campaign '{}': {} entries already journaled", plan.campaign_id, done.size());

  const auto stop = options.stop;
  const auto finish = [&] {
    result.wall_s = std::chrono::duration<double>(SteadyClock::now() - wall_begin).count();
    return result;
  };

  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    const auto& entry = plan.entries[i];
    if (done.contains(i)) {
      ++result.entries_skipped;
      continue;
    }
    if (i > 0 && !idle_gap(plan, i, result.campaign_dir, entry, stop)) return finish();
    if (stop.stop_requested()) return finish();

    const auto cfg = entry_config(plan, i, entry, result.campaign_dir);
    const auto rel_dir = (fs::path("entries") / cfg.run_id).generic_string();
    fs::remove_all(result.campaign_dir / rel_dir);

    JournalEntry record;
    record.index = i;
    record.model_id = entry.manifest.model_id;
    record.scenario = entry.scenario;
    spdlog::info("entry {} ({}, {}): {:.1f} stream s at scale {}", i, record.model_id,
                 telemetry::to_string(entry.scenario), *cfg.duration_s, cfg.time_scale);
    try {
      engine::Engine eng(cfg, options.hooks ? options.hooks(entry) : engine::EngineHooks{});
      eng.start();
      record.run_dir = rel_dir;
      if (options.on_engine_started) options.on_engine_started(eng, entry);
      std::stop_callback on_stop(stop, [&eng] { eng.stop(); });
      const auto summary = eng.wait();
      if (options.on_engine_finished) options.on_engine_finished(entry, summary);
      if (stop.stop_requested()) {
        spdlog::warn("campaign '{}' interrupted during entry {}; rerun the plan to resume", plan.campaign_id, i);
        return finish();
      }
      record.run_summary = engine::to_json(summary);
      record.status = summary.exit_reason == "failed" ? "failed" : "completed";
      if (record.status == "failed") record.error = "audio capture failed";
    } catch (const Error& e) {
      record.status = "failed";
      record.error = fmt::format("{}: {}", to_string(e.code()), e.what());
    }
    if (record.status == "failed") spdlog::error("entry {} failed: {}", i, record.error);
    append_journal(journal_path, record);
    ++result.entries_run;
    if (options.after_entry) options.after_entry(i);
  }

  result.report = write_report(result.campaign_dir);
  result.completed = true;
  return finish();
}

}  // namespace edgetag::bench
