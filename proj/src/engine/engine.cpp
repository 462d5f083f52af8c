#include "edgetag/engine/engine.hpp"

#include "edgetag/audio/capture.hpp"
#include "edgetag/audio/resampler.hpp"
#include "edgetag/audio/windower.hpp"
#include "edgetag/engine/bounded_queue.hpp"
#include "edgetag/engine/recorder.hpp"
#include "edgetag/error.hpp"
#include "edgetag/inference/model.hpp"
#include "edgetag/structured_file.hpp"
#include "edgetag/telemetry/collector.hpp"
#include "edgetag/telemetry/csv.hpp"
#include "edgetag/telemetry/temperature.hpp"
#include "edgetag/time_util.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <future>
#include <mutex>
#include <stop_token>
#include <thread>

namespace edgetag::engine {

namespace {

constexpr std::size_t kWriteQueueCapacity = 8;

bool safe_run_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

void check_window_contract(const inference::ModelManifest& manifest, const audio::WindowSpec& spec) {
  if (manifest.input_rate_hz != spec.target_rate_hz ||
      manifest.input_samples != static_cast<std::int64_t>(spec.window_samples()))
    throw Error(Errc::window_mismatch,
                fmt::format("model '{}' expects {} samples at {} Hz, windows carry {} samples at {} Hz",
                            manifest.model_id, manifest.input_samples, manifest.input_rate_hz, spec.window_samples(),
                            spec.target_rate_hz));
}

// Manifest contents with every path made absolute, so two manifests that
// name the same files compare equal wherever they live.
nlohmann::json manifest_identity(inference::ModelManifest m) {
  auto abs = [](const std::filesystem::path& p) { return std::filesystem::absolute(p).lexically_normal(); };
  m.primary_model_path = abs(m.primary_model_path);
  if (m.frontend_model_path) m.frontend_model_path = abs(*m.frontend_model_path);
  m.labels_path = abs(m.labels_path);
  m.source.clear();
  return inference::manifest_to_json(m);
}

template <class Fn, class... Args>
void call_hook(const Fn& hook, const char* name, const Args&... args) {
  if (!hook) return;
  try {
    hook(args...);
  } catch (const std::exception& e) {
    spdlog::warn("{} hook failed: {}", name, e.what());
  }
}

}  // namespace

void EngineConfig::validate() const {
  window_spec.validate();
  if (predict_queue_capacity < 1) throw Error(Errc::config, "predict_queue_capacity must be at least 1");
  if (top_k < 1) throw Error(Errc::config, "top_k must be at least 1");
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw Error(Errc::config, "time_scale must be positive");
  if (time_scale != 1.0 && source.kind == audio::SourceKind::live_device)
    throw Error(Errc::config, "time_scale other than 1 needs a synthetic or file-playback source");
  if (duration_s && !(*duration_s > 0.0)) throw Error(Errc::config, "duration_s must be positive");
  if (chunk_ms <= 0) throw Error(Errc::config, "chunk_ms must be positive");
  if (!(inference_delay_s >= 0.0)) throw Error(Errc::config, "inference_delay_s must not be negative");
  if (!(telemetry_period_s > 0.0)) throw Error(Errc::config, "telemetry_period_s must be positive");
  thermal_policy.validate();
  if (!run_id.empty() && !safe_run_id(run_id))
    throw Error(Errc::config, fmt::format("run_id '{}' may only use letters, digits, '-', '_' and '.'", run_id));
}

nlohmann::json to_json(const StatusView& s) {
  return {{"model_id", s.model_id},
          {"scenario", telemetry::to_string(s.scenario)},
          {"uptime_s", s.uptime_s},
          {"last", s.last ? to_json(*s.last) : nlohmann::json(nullptr)},
          {"counters", to_json(s.counters)},
          {"cpu_temp_c", s.cpu_temp_c ? nlohmann::json(*s.cpu_temp_c) : nlohmann::json(nullptr)},
          {"save_audio", s.save_audio},
          {"top_k", s.top_k},
          {"predictions", s.predictions},
          {"running", s.running}};
}

nlohmann::json to_json(const SwapAck& a) {
  nlohmann::json doc{{"accepted", a.accepted}, {"model_id", a.model_id}, {"latency_ms", a.latency_ms}};
  if (!a.error.empty()) doc["error"] = a.error;
  return doc;
}

nlohmann::json to_json(const RunSummary& s) {
  return {{"run_id", s.run_id},
          {"scenario", s.scenario},
          {"exit_reason", s.exit_reason},
          {"model_ids", s.model_ids},
          {"predictions", s.predictions},
          {"windows_emitted", s.windows_emitted},
          {"counters", to_json(s.counters)},
          {"telemetry_records", s.telemetry_records},
          {"thermal_events", s.thermal_events},
          {"temperature_rejected", s.temperature_rejected},
          {"temperature_unavailable", s.temperature_unavailable},
          {"wall_start", format_iso8601(s.wall_start_ns)},
          {"wall_duration_s", s.wall_duration_s},
          {"stream_duration_s", s.stream_duration_s},
          {"time_scale", s.time_scale},
          {"raw_csv", s.raw_csv.string()},
          {"agg_csv", s.agg_csv.string()},
          {"recordings_dir", s.recordings_dir.string()}};
}

struct Engine::Impl {
  EngineConfig cfg;
  EngineHooks hooks;

  std::string run_id;
  std::filesystem::path run_dir;
  std::filesystem::path recordings_dir;
  std::optional<StreamClock> clock;
  std::unique_ptr<audio::AudioSource> source;
  std::unique_ptr<telemetry::TemperatureMonitor> temperature;
  std::unique_ptr<telemetry::TelemetryCollector> collector;
  std::unique_ptr<BoundedQueue<audio::AnalysisWindow>> predict_q;
  std::unique_ptr<BoundedQueue<audio::AnalysisWindow>> write_q;
  std::unique_ptr<inference::ModelHandle> model;  // predict context only

  OverrunCounter counters;
  std::atomic<std::size_t> top_k{3};
  std::atomic<bool> save_audio{false};
  std::atomic<std::int64_t> predictions{0};
  std::atomic<std::int64_t> windows_emitted{0};
  std::atomic<std::int64_t> stream_end_ns{0};
  std::atomic<bool> started{false};
  std::atomic<bool> finished{false};
  std::atomic<bool> stop_requested{false};
  std::atomic<bool> capture_failed{false};
  std::stop_source stop;
  std::stop_source sampler_stop;
  std::thread capture_thread, predict_thread, write_thread, sampler_thread;

  std::mutex swap_call_mutex;
  std::mutex swap_mutex;
  std::unique_ptr<inference::ModelHandle> pending_model;
  std::optional<std::promise<SwapAck>> pending_ack;
  bool predict_exited = false;

  mutable std::mutex status_mutex;
  std::string active_model_id;
  nlohmann::json active_manifest;
  std::size_t label_count = 0;
  std::vector<std::string> model_ids;
  std::optional<Prediction> last;
  std::optional<double> last_temp;
  std::int64_t last_emit_stream_ns = 0;

  std::mutex wait_mutex;
  std::optional<RunSummary> summary;

  void capture_loop();
  void dispatch(audio::AnalysisWindow&& window);
  void predict_loop();
  void process(const audio::AnalysisWindow& window, std::stop_token token);
  void install_pending_swap();
  void write_loop();
  void sampler_loop();
  void note_model(const inference::ModelHandle& handle);
};

void Engine::Impl::note_model(const inference::ModelHandle& handle) {
  std::lock_guard lock(status_mutex);
  active_model_id = handle.model_id();
  active_manifest = manifest_identity(handle.manifest());
  label_count = handle.labels().names.size();
  if (std::find(model_ids.begin(), model_ids.end(), active_model_id) == model_ids.end())
    model_ids.push_back(active_model_id);
}

void Engine::Impl::capture_loop() {
  const auto& spec = cfg.window_spec;
  audio::CaptureOptions options;
  options.chunk = std::chrono::milliseconds(cfg.chunk_ms);
  options.time_scale = cfg.time_scale;
  if (cfg.duration_s) options.max_stream_ns = static_cast<std::int64_t>(std::llround(*cfg.duration_s * 1e9));

  audio::StreamingResampler resampler(source->sample_rate_hz(), spec.target_rate_hz);
  audio::WindowAssembler assembler(spec);
  std::vector<audio::AnalysisWindow> windows;
  std::vector<float> resampled;
  std::int64_t region_base_ns = 0;
  std::int64_t region_out_start = 0;
  bool first = true;
  bool pending_gap = false;

  auto feed = [&](std::int64_t out_start) {
    if (resampled.empty()) return;
    audio::PcmChunk chunk;
    chunk.sample_rate_hz = spec.target_rate_hz;
    chunk.start_time_ns = region_base_ns + out_start * 1'000'000'000 / spec.target_rate_hz;
    chunk.discontinuity = pending_gap;
    chunk.samples = std::move(resampled);
    resampled.clear();
    pending_gap = false;
    windows.clear();
    assembler.push(chunk, windows);
    counters.stream_gaps(assembler.stream_gaps());
    for (auto& w : windows) dispatch(std::move(w));
  };

  try {
    const auto stats = audio::capture_stream(*source, options, stop.get_token(), [&](audio::PcmChunk&& chunk) {
      stream_end_ns = chunk.start_time_ns + chunk.duration_ns();
      if (first || chunk.discontinuity) {
        if (!first) {
          region_out_start = resampler.produced();
          resampler.flush(resampled);
          feed(region_out_start);
          resampler.reset();
          pending_gap = true;
        }
        region_base_ns = chunk.start_time_ns;
        first = false;
      }
      region_out_start = resampler.produced();
      resampler.process(chunk.samples, resampled);
      feed(region_out_start);
    });
    if (!stop.stop_requested() && !first) {
      region_out_start = resampler.produced();
      resampler.flush(resampled);
      feed(region_out_start);
    }
    spdlog::debug("capture finished after {} chunks", stats.chunks);
  } catch (const std::exception& e) {
    spdlog::error("audio capture failed: {}", e.what());
    capture_failed = true;
  }
  predict_q->close();
  write_q->close();
}

void Engine::Impl::dispatch(audio::AnalysisWindow&& window) {
  window.ready_at = SteadyClock::now();
  ++windows_emitted;
  if (save_audio.load()) {
    if (write_q->push(window)) counters.write_failure();
  }
  if (auto evicted = predict_q->push(std::move(window))) {
    counters.window_dropped();
    spdlog::debug("predict queue full, dropped window {}", evicted->index);
  }
}

void Engine::Impl::install_pending_swap() {
  std::unique_ptr<inference::ModelHandle> previous;
  std::lock_guard lock(swap_mutex);
  if (!pending_model) return;
  previous = std::exchange(model, std::move(pending_model));
  note_model(*model);
  spdlog::info("switched model {} -> {}", previous->model_id(), model->model_id());
  if (pending_ack) {
    pending_ack->set_value({true, model->model_id(), 0.0, {}});
    pending_ack.reset();
  }
}

void Engine::Impl::predict_loop() {
  const auto token = stop.get_token();
  while (true) {
    install_pending_swap();
    auto window = predict_q->pop(token);
    if (!window) {
      if (token.stop_requested() || predict_q->drained()) break;
      continue;
    }
    install_pending_swap();
    process(*window, token);
  }
  std::string active;
  {
    std::lock_guard lock(status_mutex);
    active = active_model_id;
  }
  {
    std::lock_guard lock(swap_mutex);
    predict_exited = true;
    pending_model.reset();
    if (pending_ack) {
      pending_ack->set_value({false, active, 0.0, "engine stopped before the swap took effect"});
      pending_ack.reset();
    }
  }
  finished = true;
  sampler_stop.request_stop();
}

void Engine::Impl::process(const audio::AnalysisWindow& window, std::stop_token token) {
  const auto t0 = SteadyClock::now();
  if (cfg.inference_delay_s > 0.0) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, token, clock->scaled(cfg.inference_delay_s), [] { return false; });
    if (token.stop_requested()) return;
  }
  inference::InferenceResult result;
  try {
    result = model->infer(window);
  } catch (const std::exception& e) {
    counters.backend_failure();
    spdlog::warn("inference failed on window {}: {}", window.index, e.what());
    return;
  }
  const auto t1 = SteadyClock::now();

  Prediction p;
  p.model_id = model->model_id();
  p.window_index = window.index;
  p.window_start_ns = clock->wall_ns_at(window.start_time_ns);
  const auto& labels = model->labels();
  p.top_k = inference::top_k(result.scores, labels, std::min(top_k.load(), labels.names.size()));
  p.inference_time_ms = ms_between(t0, t1);
  const std::int64_t now_stream = clock->stream_ns(t1);
  const auto temp = temperature->sample();
  {
    std::lock_guard lock(status_mutex);
    p.recording_time_s = static_cast<double>(now_stream - last_emit_stream_ns) / 1e9;
    last_emit_stream_ns = now_stream;
    p.total_time_ms = ms_between(window.ready_at, SteadyClock::now());
    last = p;
    if (temp) last_temp = temp;
  }
  ++predictions;
  call_hook(hooks.on_prediction, "prediction", p);

  telemetry::TelemetryRecord record;
  record.wall_time_ns = clock->wall_ns_at(now_stream);
  record.model_id = p.model_id;
  record.scenario = cfg.scenario;
  record.cpu_temp_c = temp;
  record.inference_ms = p.inference_time_ms;
  record.total_ms = p.total_time_ms;
  collector->post(std::move(record));
}

void Engine::Impl::write_loop() {
  const auto token = stop.get_token();
  bool warned = false;
  while (true) {
    auto window = write_q->pop(token);
    if (!window) {
      if (token.stop_requested() || write_q->drained()) break;
      continue;
    }
    try {
      write_audio(*window, recordings_dir, clock->wall_ns_at(window->start_time_ns));
    } catch (const std::exception& e) {
      counters.write_failure();
      if (!warned) spdlog::warn("recording window {} failed: {}", window->index, e.what());
      warned = true;
    }
  }
}

void Engine::Impl::sampler_loop() {
  const auto token = sampler_stop.get_token();
  const auto period_ns = static_cast<std::int64_t>(std::llround(cfg.telemetry_period_s * 1e9));
  std::mutex m;
  std::condition_variable_any cv;
  std::int64_t seen = predictions.load();
  for (std::int64_t k = 1;; ++k) {
    {
      std::unique_lock lock(m);
      cv.wait_until(lock, token, clock->steady_at(k * period_ns), [] { return false; });
    }
    if (token.stop_requested()) break;
    const std::int64_t now = predictions.load();
    if (now == seen) {
      const auto temp = temperature->sample();
      if (temp) {
        {
          std::lock_guard lock(status_mutex);
          last_temp = temp;
        }
        telemetry::TelemetryRecord record;
        record.wall_time_ns = clock->wall_ns_at(k * period_ns);
        {
          std::lock_guard lock(status_mutex);
          record.model_id = active_model_id;
        }
        record.scenario = cfg.scenario;
        record.cpu_temp_c = temp;
        collector->post(std::move(record));
      }
    }
    seen = now;
  }
}

Engine::Engine(EngineConfig config, EngineHooks hooks) : impl_(std::make_unique<Impl>()) {
  config.validate();
  impl_->cfg = std::move(config);
  impl_->hooks = std::move(hooks);
  impl_->top_k = impl_->cfg.top_k;
  impl_->save_audio = impl_->cfg.save_audio;
}

Engine::~Engine() {
  if (!impl_->started) return;
  stop();
  try {
    wait();
  } catch (const std::exception& e) {
    spdlog::error("engine shutdown failed: {}", e.what());
  }
}

void Engine::start() {
  auto& d = *impl_;
  if (d.started) throw Error(Errc::config, "engine already started");
  const auto& cfg = d.cfg;
  cfg.manifest.validate();
  check_window_contract(cfg.manifest, cfg.window_spec);
  d.model = inference::ModelHandle::load(cfg.manifest);
  if (cfg.top_k > d.model->labels().names.size())
    throw Error(Errc::config, fmt::format("top_k {} exceeds the {} labels of model '{}'", cfg.top_k,
                                          d.model->labels().names.size(), d.model->model_id()));
  d.note_model(*d.model);
  d.source = audio::open_source(cfg.source);
  d.temperature = std::make_unique<telemetry::TemperatureMonitor>(
      telemetry::make_temperature_source(cfg.temperature_source));

  d.clock.emplace(cfg.time_scale, cfg.wall_start_ns.value_or(to_ns(SystemClock::now())));
  d.run_id = cfg.run_id.empty() ? format_iso8601_basic_ms(d.clock->wall_start_ns()) : cfg.run_id;
  d.run_dir = cfg.output_dir / d.run_id;
  d.recordings_dir = cfg.recordings_dir / d.run_id;
  std::error_code ec;
  std::filesystem::create_directories(d.run_dir, ec);
  if (ec) throw Error(Errc::io, fmt::format("cannot create run directory {}: {}", d.run_dir.string(), ec.message()));

  telemetry::TelemetryCollector::Options topts;
  topts.raw_csv_path = d.run_dir / "telemetry_raw.csv";
  topts.policy = cfg.thermal_policy;
  topts.on_bucket = [this](const telemetry::AggBucket& b) { call_hook(impl_->hooks.on_bucket, "bucket", b); };
  topts.on_thermal_event = [this](const telemetry::ThermalEvent& e) {
    call_hook(impl_->hooks.on_thermal_event, "thermal event", e);
  };
  d.collector = std::make_unique<telemetry::TelemetryCollector>(std::move(topts));
  d.predict_q = std::make_unique<BoundedQueue<audio::AnalysisWindow>>(cfg.predict_queue_capacity);
  d.write_q = std::make_unique<BoundedQueue<audio::AnalysisWindow>>(kWriteQueueCapacity);
  d.last_temp = d.temperature->sample();

  spdlog::info("run {}: model '{}', source {}, scenario {}, time scale {}", d.run_id, d.model->model_id(),
               d.source->describe(), telemetry::to_string(cfg.scenario), cfg.time_scale);
  d.started = true;
  d.predict_thread = std::thread([&d] { d.predict_loop(); });
  d.write_thread = std::thread([&d] { d.write_loop(); });
  d.sampler_thread = std::thread([&d] { d.sampler_loop(); });
  d.capture_thread = std::thread([&d] { d.capture_loop(); });
}

void Engine::stop() {
  auto& d = *impl_;
  d.stop_requested = true;
  d.stop.request_stop();
  d.sampler_stop.request_stop();
}

bool Engine::wait_for(std::chrono::milliseconds timeout) {
  auto& d = *impl_;
  if (!d.started) return true;
  const auto deadline = SteadyClock::now() + timeout;
  while (!d.finished) {
    if (SteadyClock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

RunSummary Engine::wait() {
  auto& d = *impl_;
  if (!d.started) throw Error(Errc::config, "engine was never started");
  std::lock_guard lock(d.wait_mutex);
  if (d.summary) return *d.summary;
  for (auto* t : {&d.capture_thread, &d.predict_thread, &d.write_thread}) {
    if (t->joinable()) t->join();
  }
  d.sampler_stop.request_stop();
  if (d.sampler_thread.joinable()) d.sampler_thread.join();
  d.collector->close();
  const auto wall_end = SteadyClock::now();

  RunSummary s;
  s.run_id = d.run_id;
  s.scenario = telemetry::to_string(d.cfg.scenario);
  s.exit_reason = d.capture_failed ? "failed" : d.stop_requested ? "stopped" : "end_of_stream";
  {
    std::lock_guard status_lock(d.status_mutex);
    s.model_ids = d.model_ids;
  }
  s.predictions = d.predictions;
  s.windows_emitted = d.windows_emitted;
  s.counters = d.counters.snapshot();
  s.telemetry_records = static_cast<std::int64_t>(d.collector->record_count());
  s.thermal_events = static_cast<std::int64_t>(d.collector->events().size());
  s.temperature_rejected = static_cast<std::int64_t>(d.temperature->rejected());
  s.temperature_unavailable = static_cast<std::int64_t>(d.temperature->unavailable());
  s.wall_start_ns = d.clock->wall_start_ns();
  s.wall_duration_s = std::chrono::duration<double>(wall_end - d.clock->steady_start()).count();
  s.stream_duration_s = static_cast<double>(d.stream_end_ns.load()) / 1e9;
  s.time_scale = d.cfg.time_scale;
  s.raw_csv = d.run_dir / "telemetry_raw.csv";
  s.agg_csv = d.run_dir / "telemetry_agg.csv";
  s.recordings_dir = d.recordings_dir;

  write_file_atomic(s.agg_csv, telemetry::agg_csv(d.collector->buckets()));
  write_file_atomic(d.run_dir / "run_summary.json", to_json(s).dump(2) + "\n");
  spdlog::info("run {} finished ({}): {} predictions, {} dropped, {} backend failures", s.run_id, s.exit_reason,
               s.predictions, s.counters.windows_dropped, s.counters.backend_failures);
  d.summary = s;
  return s;
}

bool Engine::running() const { return impl_->started && !impl_->finished; }

StatusView Engine::status() const {
  const auto& d = *impl_;
  StatusView s;
  s.scenario = d.cfg.scenario;
  s.counters = d.counters.snapshot();
  s.save_audio = d.save_audio;
  s.top_k = d.top_k;
  s.predictions = d.predictions;
  s.running = running();
  if (d.clock) s.uptime_s = std::chrono::duration<double>(SteadyClock::now() - d.clock->steady_start()).count();
  std::lock_guard lock(d.status_mutex);
  s.model_id = d.active_model_id.empty() ? d.cfg.manifest.model_id : d.active_model_id;
  s.last = d.last;
  s.cpu_temp_c = d.last_temp;
  return s;
}

SwapAck Engine::swap_model(const inference::ModelManifest& manifest) {
  auto& d = *impl_;
  std::lock_guard call_lock(d.swap_call_mutex);
  const auto t0 = SteadyClock::now();
  auto active_id = [&d] {
    std::lock_guard lock(d.status_mutex);
    return d.active_model_id;
  };
  auto reject = [&](const std::string& why) {
    spdlog::warn("model swap to '{}' rejected: {}", manifest.model_id, why);
    return SwapAck{false, active_id(), ms_between(t0, SteadyClock::now()), why};
  };
  if (!running()) return reject("engine is not running");
  {
    std::lock_guard lock(d.status_mutex);
    if (manifest_identity(manifest) == d.active_manifest)
      return SwapAck{true, d.active_model_id, ms_between(t0, SteadyClock::now()), {}};
  }
  std::unique_ptr<inference::ModelHandle> handle;
  try {
    manifest.validate();
    check_window_contract(manifest, d.cfg.window_spec);
    handle = inference::ModelHandle::load(manifest);
  } catch (const Error& e) {
    return reject(fmt::format("{}: {}", to_string(e.code()), e.what()));
  }
  std::future<SwapAck> ack;
  {
    std::lock_guard lock(d.swap_mutex);
    if (d.predict_exited) return reject("engine is not running");
    d.pending_model = std::move(handle);
    d.pending_ack.emplace();
    ack = d.pending_ack->get_future();
  }
  d.predict_q->wake();
  SwapAck result = ack.get();
  result.latency_ms = ms_between(t0, SteadyClock::now());
  return result;
}

void Engine::set_top_k(std::size_t k) {
  auto& d = *impl_;
  std::size_t labels = 0;
  {
    std::lock_guard lock(d.status_mutex);
    labels = d.label_count;
  }
  if (k < 1 || (labels > 0 && k > labels))
    throw Error(Errc::config, fmt::format("top_k {} outside [1, {}]", k, labels));
  d.top_k = k;
}

void Engine::set_save_audio(bool enabled) { impl_->save_audio = enabled; }

const EngineConfig& Engine::config() const { return impl_->cfg; }
const std::string& Engine::run_id() const { return impl_->run_id; }
std::filesystem::path Engine::run_dir() const { return impl_->run_dir; }

std::string Engine::raw_csv() const {
  if (!impl_->collector) return std::string(telemetry::kRawCsvHeader) + "\n";
  return telemetry::raw_csv(impl_->collector->snapshot());
}

std::string Engine::agg_csv() const {
  if (!impl_->collector) return std::string(telemetry::kAggCsvHeader) + "\n";
  return telemetry::agg_csv(impl_->collector->buckets());
}

std::vector<telemetry::ThermalEvent> Engine::thermal_events() const {
  if (!impl_->collector) return {};
  return impl_->collector->events();
}

}  // namespace edgetag::engine
