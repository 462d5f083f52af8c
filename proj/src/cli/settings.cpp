#include "edgetag/cli/settings.hpp"

#include "edgetag/engine/config_io.hpp"
#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"

namespace edgetag::cli {

namespace {

namespace fs = std::filesystem;

fs::path resolve(const std::string& text, const fs::path& base_dir) {
  fs::path p = text;
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal();
}

std::string absolute_text(const fs::path& p) {
  return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
}

}  // namespace

void apply_settings(const nlohmann::json& doc, const fs::path& base_dir, RunSettings& s) {
  const ConfigReader r(doc, "run config");
  r.allow({"model", "scenario", "save_audio", "time_scale", "duration_s", "top_k", "predict_queue_capacity", "chunk_ms",
           "inference_delay_s", "telemetry_period_s", "temperature_source", "warning_threshold_c", "output_dir",
           "recordings_dir", "run_id", "api", "listen", "models_dir", "ui_dir", "log_level", "source", "window"});
  auto& e = s.engine;
  if (auto v = r.string("model")) s.model = resolve(*v, base_dir);
  if (auto v = r.string("scenario")) e.scenario = telemetry::parse_scenario(*v);
  e.save_audio = r.boolean("save_audio", e.save_audio);
  e.time_scale = r.number("time_scale", e.time_scale);
  if (auto v = r.number("duration_s")) e.duration_s = *v;
  const auto top_k = r.integer("top_k", static_cast<std::int64_t>(e.top_k));
  if (top_k < 1) throw Error(Errc::config, "run config: 'top_k' must be at least 1");
  e.top_k = static_cast<std::size_t>(top_k);
  const auto capacity = r.integer("predict_queue_capacity", static_cast<std::int64_t>(e.predict_queue_capacity));
  if (capacity < 1) throw Error(Errc::config, "run config: 'predict_queue_capacity' must be at least 1");
  e.predict_queue_capacity = static_cast<std::size_t>(capacity);
  e.chunk_ms = static_cast<int>(r.integer("chunk_ms", e.chunk_ms));
  e.inference_delay_s = r.number("inference_delay_s", e.inference_delay_s);
  e.telemetry_period_s = r.number("telemetry_period_s", e.telemetry_period_s);
  e.temperature_source = r.string("temperature_source", e.temperature_source);
  e.thermal_policy.warning_threshold_c = r.number("warning_threshold_c", e.thermal_policy.warning_threshold_c);
  if (auto v = r.string("output_dir")) e.output_dir = resolve(*v, base_dir);
  if (auto v = r.string("recordings_dir")) e.recordings_dir = resolve(*v, base_dir);
  e.run_id = r.string("run_id", e.run_id);
  s.api = r.boolean("api", s.api);
  if (auto v = r.string("listen")) s.listen = control::parse_endpoint(*v);
  if (auto v = r.string("models_dir")) s.models_dir = v->empty() ? std::nullopt : std::optional(resolve(*v, base_dir));
  if (auto v = r.string("ui_dir")) s.ui_dir = v->empty() ? std::nullopt : std::optional(resolve(*v, base_dir));
  s.log_level = r.string("log_level", s.log_level);
  if (r.has("source")) e.source = engine::source_from_json(r.at("source"), base_dir);
  if (r.has("window")) e.window_spec = engine::window_from_json(r.at("window"));
}

RunSettings settings_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  RunSettings s;
  apply_settings(doc, base_dir, s);
  return s;
}

nlohmann::json settings_to_json(const RunSettings& s) {
  const auto& e = s.engine;
  auto source = engine::to_json(e.source);
  if (e.source.kind == audio::SourceKind::file_playback && !e.source.device_id.empty())
    source["device"] = absolute_text(e.source.device_id);
  nlohmann::json doc{{"model", absolute_text(s.model)},
                     {"scenario", telemetry::to_string(e.scenario)},
                     {"save_audio", e.save_audio},
                     {"time_scale", e.time_scale},
                     {"top_k", e.top_k},
                     {"predict_queue_capacity", e.predict_queue_capacity},
                     {"chunk_ms", e.chunk_ms},
                     {"inference_delay_s", e.inference_delay_s},
                     {"telemetry_period_s", e.telemetry_period_s},
                     {"temperature_source", e.temperature_source},
                     {"warning_threshold_c", e.thermal_policy.warning_threshold_c},
                     {"output_dir", absolute_text(e.output_dir)},
                     {"recordings_dir", absolute_text(e.recordings_dir)},
                     {"run_id", e.run_id},
                     {"api", s.api},
                     {"listen", control::to_string(s.listen)},
                     {"models_dir", s.models_dir ? absolute_text(*s.models_dir) : std::string()},
                     {"ui_dir", s.ui_dir ? absolute_text(*s.ui_dir) : std::string()},
                     {"log_level", s.log_level},
                     {"source", std::move(source)},
                     {"window", engine::to_json(e.window_spec)}};
  if (e.duration_s) doc["duration_s"] = *e.duration_s;
  return doc;
}

}  // namespace edgetag::cli
