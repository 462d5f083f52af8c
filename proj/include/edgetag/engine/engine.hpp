#pragma once

#include "edgetag/audio/source.hpp"
#include "edgetag/audio/types.hpp"
#include "edgetag/engine/prediction.hpp"
#include "edgetag/engine/stream_clock.hpp"
#include "edgetag/inference/manifest.hpp"
#include "edgetag/telemetry/aggregate.hpp"
#include "edgetag/telemetry/record.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace edgetag::engine {

struct EngineConfig {
  audio::WindowSpec window_spec;
  inference::ModelManifest manifest;
  audio::SourceConfig source;
  bool save_audio = false;
  telemetry::Scenario scenario = telemetry::Scenario::headless;
  std::size_t predict_queue_capacity = 2;
  std::size_t top_k = 3;
  // Wall seconds per stream second; values other than 1 need a synthetic or
  // file source.
  double time_scale = 1.0;
  // Stream seconds to capture; unset runs until stopped or end of stream.
  std::optional<double> duration_s;
  int chunk_ms = 100;
  // Stream seconds added to every inference (fault/overload injection).
  double inference_delay_s = 0.0;
  double telemetry_period_s = 5.0;
  // "sysfs", "sysfs:<path>", "mock:<v1>,<v2>,..." or "none".
  std::string temperature_source = "sysfs";
  telemetry::ThermalPolicy thermal_policy;
  std::filesystem::path output_dir = "runs";
  std::filesystem::path recordings_dir = "recordings";
  // Generated from the start time when empty.
  std::string run_id;
  // Wall time of stream second 0; now when unset.
  std::optional<std::int64_t> wall_start_ns;

  // Throws Error(Errc::config).
  void validate() const;
};

struct EngineHooks {
  std::function<void(const Prediction&)> on_prediction;
  std::function<void(const telemetry::AggBucket&)> on_bucket;
  std::function<void(const telemetry::ThermalEvent&)> on_thermal_event;
};

struct StatusView {
  std::string model_id;
  telemetry::Scenario scenario = telemetry::Scenario::headless;
  double uptime_s = 0.0;
  std::optional<Prediction> last;
  OverrunCounts counters;
  std::optional<double> cpu_temp_c;
  bool save_audio = false;
  std::size_t top_k = 3;
  std::int64_t predictions = 0;
  bool running = false;
};

nlohmann::json to_json(const StatusView& status);

struct SwapAck {
  bool accepted = false;
  std::string model_id;  // active model after the request
  double latency_ms = 0.0;
  std::string error;
};

nlohmann::json to_json(const SwapAck& ack);

struct RunSummary {
  std::string run_id;
  std::string scenario;
  std::string exit_reason;  // "end_of_stream", "stopped" or "failed"
  std::vector<std::string> model_ids;
  std::int64_t predictions = 0;
  std::int64_t windows_emitted = 0;
  OverrunCounts counters;
  std::int64_t telemetry_records = 0;
  std::int64_t thermal_events = 0;
  std::int64_t temperature_rejected = 0;
  std::int64_t temperature_unavailable = 0;
  std::int64_t wall_start_ns = 0;
  double wall_duration_s = 0.0;
  double stream_duration_s = 0.0;
  double time_scale = 1.0;
  std::filesystem::path raw_csv;
  std::filesystem::path agg_csv;
  std::filesystem::path recordings_dir;
};

nlohmann::json to_json(const RunSummary& summary);

/// Live loop: record -> (write) -> predict, joined by bounded queues, plus a
/// periodic temperature sampler and the telemetry collector. Control methods
/// are safe to call from any thread.
class Engine {
 public:
  explicit Engine(EngineConfig config, EngineHooks hooks = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Loads the model and opens the source; throws the startup error
  // (manifest_invalid, file_missing, graph_invalid, device_unavailable, ...).
  void start();
  // Broadcast shutdown; pending windows are discarded.
  void stop();
  // Blocks until every context has exited, writes the telemetry CSVs and
  // the summary, and returns it. Idempotent.
  RunSummary wait();
  bool wait_for(std::chrono::milliseconds timeout);
  RunSummary run() {
    start();
    return wait();
  }

  bool running() const;
  StatusView status() const;
  // Loads `manifest` and installs it between windows; returns once the
  // predict context has switched (or the request was rejected).
  SwapAck swap_model(const inference::ModelManifest& manifest);
  // Throws Error(Errc::config) for k outside [1, label count].
  void set_top_k(std::size_t k);
  void set_save_audio(bool enabled);

  const EngineConfig& config() const;
  const std::string& run_id() const;
  std::filesystem::path run_dir() const;
  std::string raw_csv() const;
  std::string agg_csv() const;
  std::vector<telemetry::ThermalEvent> thermal_events() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace edgetag::engine
