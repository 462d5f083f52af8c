#include "edgetag/bench/plan.hpp"

#include "edgetag/engine/config_io.hpp"
#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace edgetag::bench {

namespace {

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

std::string to_string(ClockMode mode) { return mode == ClockMode::stream ? "stream" : "durations"; }

ClockMode parse_clock_mode(const std::string& text) {
  if (text == "durations") return ClockMode::durations;
  if (text == "stream") return ClockMode::stream;
  throw Error(Errc::config, fmt::format("unknown clock_mode '{}' (expected durations or stream)", text));
}

void BenchmarkPlan::validate() const {
  if (campaign_id.empty() || campaign_id == "." || campaign_id == ".." ||
      !std::all_of(campaign_id.begin(), campaign_id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
      }))
    throw Error(Errc::config, fmt::format("campaign_id '{}' may only use letters, digits, '-', '_' and '.'",
                                          campaign_id));
  if (entries.empty()) throw Error(Errc::config, "plan has no entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!positive(entries[i].run_duration_s))
      throw Error(Errc::config, fmt::format("entry {}: run_duration_s must be positive", i));
    if (!(entries[i].inference_delay_s >= 0.0))
      throw Error(Errc::config, fmt::format("entry {}: inference_delay_s must not be negative", i));
  }
  if (!(idle_between_s >= 0.0) || !std::isfinite(idle_between_s))
    throw Error(Errc::config, "idle_between_s must not be negative");
  if (!positive(time_scale)) throw Error(Errc::config, "time_scale must be positive");
  if (!(idle_sample_period_s >= 0.0)) throw Error(Errc::config, "idle_sample_period_s must not be negative");
  if (predict_queue_capacity < 1) throw Error(Errc::config, "predict_queue_capacity must be at least 1");
  if (clock_mode == ClockMode::stream && source.kind == audio::SourceKind::live_device)
    throw Error(Errc::config, "clock_mode 'stream' needs a synthetic or file-playback source");
  thermal_policy.validate();
  window.validate();
}

double BenchmarkPlan::scheduled_wall_s() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.run_duration_s;
  if (!entries.empty()) total += idle_between_s * static_cast<double>(entries.size() - 1);
  return total * time_scale;
}

double BenchmarkPlan::engine_duration_s(const PlanEntry& entry) const {
  return clock_mode == ClockMode::stream ? entry.run_duration_s : entry.run_duration_s * time_scale;
}

double BenchmarkPlan::engine_time_scale() const { return clock_mode == ClockMode::stream ? time_scale : 1.0; }

BenchmarkPlan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  const ConfigReader r(doc, "plan");
  r.allow({"campaign_id", "entries", "idle_between_s", "time_scale", "clock_mode", "idle_sample_period_s",
           "temperature_source", "warning_threshold_c", "source", "window", "predict_queue_capacity"});
  BenchmarkPlan plan;
  plan.campaign_id = r.required_string("campaign_id");
  plan.idle_between_s = r.number("idle_between_s", plan.idle_between_s);
  plan.time_scale = r.number("time_scale", plan.time_scale);
  if (auto v = r.string("clock_mode")) plan.clock_mode = parse_clock_mode(*v);
  plan.idle_sample_period_s = r.number("idle_sample_period_s", plan.idle_sample_period_s);
  plan.temperature_source = r.string("temperature_source", plan.temperature_source);
  plan.thermal_policy.warning_threshold_c = r.number("warning_threshold_c", plan.thermal_policy.warning_threshold_c);
  if (r.has("source")) plan.source = engine::source_from_json(r.at("source"), base_dir);
  if (r.has("window")) plan.window = engine::window_from_json(r.at("window"));
  const auto capacity = r.integer("predict_queue_capacity", 2);
  if (capacity < 1) throw Error(Errc::config, "plan: 'predict_queue_capacity' must be at least 1");
  plan.predict_queue_capacity = static_cast<std::size_t>(capacity);

  const auto& entries = r.at("entries");
  if (!entries.is_array()) throw Error(Errc::config, "plan: 'entries' must be an array of tables");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ConfigReader e(entries[i], fmt::format("plan entry {}", i));
    e.allow({"manifest", "model_id", "run_duration_s", "scenario", "inference_delay_s"});
    std::filesystem::path manifest_path = e.required_string("manifest");
    if (manifest_path.is_relative() && !base_dir.empty()) manifest_path = base_dir / manifest_path;
    PlanEntry entry;
    entry.manifest = inference::load_manifest(manifest_path.lexically_normal());
    if (auto id = e.string("model_id"); id && *id != entry.manifest.model_id)
      throw Error(Errc::config, fmt::format("{}: model_id '{}' does not match manifest model '{}'", e.context(), *id,
                                            entry.manifest.model_id));
    entry.run_duration_s = e.number("run_duration_s", entry.run_duration_s);
    if (auto s = e.string("scenario")) entry.scenario = telemetry::parse_scenario(*s);
    entry.inference_delay_s = e.number("inference_delay_s", entry.inference_delay_s);
    plan.entries.push_back(std::move(entry));
  }
  plan.validate();
  return plan;
}

BenchmarkPlan load_plan(const std::filesystem::path& path) {
  return plan_from_json(load_structured_file(path), path.parent_path());
}

nlohmann::json plan_to_json(const BenchmarkPlan& plan) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : plan.entries) {
    const auto manifest_path = e.manifest.source.empty() ? std::filesystem::path()
                                                         : std::filesystem::absolute(e.manifest.source).lexically_normal();
    entries.push_back({{"manifest", manifest_path.string()},
                       {"model_id", e.manifest.model_id},
                       {"run_duration_s", e.run_duration_s},
                       {"scenario", telemetry::to_string(e.scenario)},
                       {"inference_delay_s", e.inference_delay_s}});
  }
  return {{"campaign_id", plan.campaign_id},
          {"entries", std::move(entries)},
          {"idle_between_s", plan.idle_between_s},
          {"time_scale", plan.time_scale},
          {"clock_mode", to_string(plan.clock_mode)},
          {"idle_sample_period_s", plan.idle_sample_period_s},
          {"temperature_source", plan.temperature_source},
          {"warning_threshold_c", plan.thermal_policy.warning_threshold_c},
          {"source", engine::to_json(plan.source)},
          {"window", engine::to_json(plan.window)},
          {"predict_queue_capacity", plan.predict_queue_capacity}};
}

}  // namespace edgetag::bench
