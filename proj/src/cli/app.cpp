#include "edgetag/cli/app.hpp"

#include "edgetag/bench/harness.hpp"
#include "edgetag/bench/plan.hpp"
#include "edgetag/bench/report.hpp"
#include "edgetag/cli/golden_check.hpp"
#include "edgetag/cli/settings.hpp"
#include "edgetag/cli/signals.hpp"
#include "edgetag/control/server.hpp"
#include "edgetag/engine/engine.hpp"
#include "edgetag/inference/model.hpp"
#include "edgetag/log.hpp"
#include "edgetag/structured_file.hpp"
#include "edgetag/telemetry/csv.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace edgetag::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kConfigEnv = "EDGE_TAGGER_CONFIG";

struct RunArgs {
  std::string config;
  std::string model;
  std::string source;
  std::string input;
  int device_rate = 0;
  std::string signal;
  double frequency = 0.0;
  bool headless = false;
  bool gui = false;
  bool save_audio = false;
  double time_scale = 1.0;
  double duration = 0.0;
  std::size_t top_k = 3;
  std::size_t queue_capacity = 2;
  double inference_delay = 0.0;
  std::string temperature;
  double warning_threshold = 85.0;
  std::string output_dir;
  std::string recordings_dir;
  std::string run_id;
  std::string listen;
  bool no_api = false;
  std::string models_dir;
  std::string ui_dir;
  bool dump_config = false;
};

struct BenchArgs {
  std::string plan;
  double time_scale = 1.0;
  std::string clock_mode;
  std::string reports_dir = "reports";
  std::string listen;
  bool no_api = false;
  std::string models_dir;
  std::string ui_dir;
};

struct ValidateArgs {
  std::vector<std::string> models;
  std::string golden;
  double tolerance = 1e-4;
};

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

RunSettings effective_settings(const CLI::App* cmd, const RunArgs& a) {
  RunSettings s;
  std::string config = a.config;
  if (config.empty())
    if (const char* env = std::getenv(kConfigEnv); env && *env) config = env;
  if (!config.empty()) apply_settings(load_structured_file(config), fs::path(config).parent_path(), s);

  auto& e = s.engine;
  if (given(cmd, "--model")) s.model = fs::path(a.model).lexically_normal();
  if (given(cmd, "--source")) e.source.kind = audio::parse_source_kind(a.source);
  if (given(cmd, "--input")) e.source.device_id = a.input;
  if (given(cmd, "--device-rate")) e.source.device_rate_hz = a.device_rate;
  if (given(cmd, "--signal")) e.source.signal = audio::parse_synthetic_signal(a.signal);
  if (given(cmd, "--frequency")) e.source.frequency_hz = a.frequency;
  if (a.headless) e.scenario = telemetry::Scenario::headless;
  if (a.gui) e.scenario = telemetry::Scenario::gui;
  if (given(cmd, "--save-audio")) e.save_audio = a.save_audio;
  if (given(cmd, "--time-scale")) e.time_scale = a.time_scale;
  if (given(cmd, "--duration")) e.duration_s = a.duration;
  if (given(cmd, "--top-k")) e.top_k = a.top_k;
  if (given(cmd, "--queue-capacity")) e.predict_queue_capacity = a.queue_capacity;
  if (given(cmd, "--inference-delay")) e.inference_delay_s = a.inference_delay;
  if (given(cmd, "--temperature")) e.temperature_source = a.temperature;
  if (given(cmd, "--warning-threshold")) e.thermal_policy.warning_threshold_c = a.warning_threshold;
  if (given(cmd, "--output-dir")) e.output_dir = a.output_dir;
  if (given(cmd, "--recordings-dir")) e.recordings_dir = a.recordings_dir;
  if (given(cmd, "--run-id")) e.run_id = a.run_id;
  if (given(cmd, "--listen")) s.listen = control::parse_endpoint(a.listen);
  if (a.no_api) s.api = false;
  if (given(cmd, "--models-dir")) s.models_dir = a.models_dir;
  if (given(cmd, "--ui-dir")) s.ui_dir = a.ui_dir;
  return s;
}

control::ModelRegistry registry_for(const std::optional<fs::path>& models_dir,
                                    const std::vector<inference::ModelManifest>& required) {
  control::ModelRegistry registry;
  if (models_dir) {
    registry = control::load_registry(*models_dir);
  } else if (!required.empty() && !required.front().source.empty()) {
    registry = control::load_registry(required.front().source.parent_path().empty()
                                          ? fs::path(".")
                                          : required.front().source.parent_path());
  }
  for (const auto& m : required)
    if (!registry.find(m.model_id)) registry.add(m);
  return registry;
}

int cmd_run(const CLI::App* cmd, const RunArgs& a, const std::string& log_level) {
  auto s = effective_settings(cmd, a);
  if (!log_level.empty()) s.log_level = log_level;
  if (a.dump_config) {
    std::cout << to_toml(settings_to_json(s));
    return kExitOk;
  }
  log::init(s.log_level);
  if (s.model.empty()) throw Error(Errc::config, "no model manifest given (--model or 'model' in the config file)");
  s.engine.manifest = inference::load_manifest(s.model);
  s.engine.validate();

  SignalGuard signals;
  std::unique_ptr<control::ControlServer> server;
  if (s.api) {
    control::ControlOptions o;
    o.listen = s.listen;
    o.ui_dir = s.ui_dir;
    o.registry = registry_for(s.models_dir, {s.engine.manifest});
    o.on_end_process = [&signals] { signals.source().request_stop(); };
    server = std::make_unique<control::ControlServer>(std::move(o));
    server->start();
  }

  engine::Engine eng(s.engine, server ? server->hooks() : engine::EngineHooks{});
  eng.start();
  if (server) server->attach(&eng, s.engine.scenario == telemetry::Scenario::gui);
  engine::RunSummary summary;
  {
    std::stop_callback on_stop(signals.token(), [&eng] { eng.stop(); });
    summary = eng.wait();
  }
  if (server) {
    server->detach(summary);
    server->stop();
  }
  std::cout << engine::to_json(summary).dump(2) << "\n";
  return summary.exit_reason == "failed" ? kExitFailure : kExitOk;
}

int cmd_bench(const CLI::App* cmd, const BenchArgs& a, const std::string& log_level) {
  log::init(log_level.empty() ? "info" : log_level);
  auto plan = bench::load_plan(a.plan);
  if (given(cmd, "--time-scale")) plan.time_scale = a.time_scale;
  if (given(cmd, "--clock-mode")) plan.clock_mode = bench::parse_clock_mode(a.clock_mode);
  plan.validate();
  spdlog::info("campaign '{}': {} entries, scheduled wall time {:.1f} s", plan.campaign_id, plan.entries.size(),
               plan.scheduled_wall_s());

  SignalGuard signals;
  const bool any_gui = std::any_of(plan.entries.begin(), plan.entries.end(),
                                   [](const auto& e) { return e.scenario == telemetry::Scenario::gui; });
  std::unique_ptr<control::ControlServer> server;
  if (any_gui && !a.no_api) {
    control::ControlOptions o;
    if (given(cmd, "--listen")) o.listen = control::parse_endpoint(a.listen);
    if (given(cmd, "--ui-dir")) o.ui_dir = fs::path(a.ui_dir);
    std::vector<inference::ModelManifest> manifests;
    for (const auto& e : plan.entries) manifests.push_back(e.manifest);
    o.registry = registry_for(given(cmd, "--models-dir") ? std::optional<fs::path>(a.models_dir) : std::nullopt,
                              manifests);
    o.on_end_process = [&signals] { signals.source().request_stop(); };
    server = std::make_unique<control::ControlServer>(std::move(o));
    server->start();
  }

  bench::BenchOptions options;
  options.reports_root = a.reports_dir;
  options.stop = signals.token();
  if (server) {
    options.hooks = [&](const bench::PlanEntry& e) {
      return e.scenario == telemetry::Scenario::gui ? server->hooks() : engine::EngineHooks{};
    };
    options.on_engine_started = [&](engine::Engine& eng, const bench::PlanEntry& e) {
      server->attach(&eng, e.scenario == telemetry::Scenario::gui);
    };
    options.on_engine_finished = [&](const bench::PlanEntry&, const engine::RunSummary& summary) {
      server->detach(summary);
    };
  }
  const auto result = bench::execute_plan(plan, options);
  if (server) server->stop();
  if (!result.completed) {
    spdlog::warn("campaign interrupted after {:.1f} s; rerun the same plan to resume", result.wall_s);
    return kExitOk;
  }
  std::size_t failed = 0;
  for (const auto& e : result.report->entries) failed += e.status == "failed" ? 1 : 0;
  std::cout << (result.campaign_dir / "summary.json").string() << "\n";
  spdlog::info("campaign '{}' finished in {:.1f} s ({} run, {} resumed, {} failed)", plan.campaign_id, result.wall_s,
               result.entries_run, result.entries_skipped, failed);
  return failed == 0 ? kExitOk : kExitFailure;
}

int cmd_report(const std::string& dir_text, const std::string& log_level) {
  log::init(log_level.empty() ? "info" : log_level);
  const fs::path dir = dir_text;
  if (fs::exists(dir / "plan.json")) {
    const auto report = bench::write_report(dir);
    std::cout << (dir / "summary.json").string() << "\n";
    for (const auto& [scenario, rows] : report.rankings)
      for (const auto& r : rows)
        spdlog::info("{} #{}: {} (entry {}), mean latency {:.3f} ms", scenario, r.rank, r.summary.model_id,
                     r.summary.entry_index, r.summary.latency_mean_ms);
    return kExitOk;
  }
  if (fs::exists(dir / "telemetry_raw.csv")) {
    const auto records = telemetry::read_raw_csv(dir / "telemetry_raw.csv");
    write_file_atomic(dir / "telemetry_agg.csv", telemetry::agg_csv(telemetry::aggregate(records)));
    std::cout << (dir / "telemetry_agg.csv").string() << "\n";
    return kExitOk;
  }
  throw Error(Errc::file_missing,
              fmt::format("{} holds neither a campaign (plan.json) nor a run (telemetry_raw.csv)", dir.string()));
}

int cmd_validate(const ValidateArgs& a, const std::string& log_level) {
  log::init(log_level.empty() ? "warn" : log_level);
  if (a.models.empty() && a.golden.empty()) throw Error(Errc::config, "validate needs --model and/or --golden");
  int code = kExitOk;
  for (const auto& path : a.models) {
    try {
      const auto manifest = inference::load_manifest(path);
      const auto handle = inference::ModelHandle::load(manifest);
      std::cout << fmt::format("ok {}: model '{}' ({}), input [{}], {} labels, {} bytes\n", path, manifest.model_id,
                               inference::to_string(manifest.pipeline_kind), fmt::join(handle->input_shape(), ", "),
                               handle->labels().size(), handle->model_file_bytes());
    } catch (const Error& e) {
      std::cerr << fmt::format("invalid {}: [{}] {}\n", path, to_string(e.code()), e.what());
      code = std::max(code, exit_code_for(e.code()));
    }
  }
  if (!a.golden.empty()) {
    for (const auto& r : check_golden(a.golden, a.tolerance)) {
      std::cout << fmt::format("{} golden {}: shape ({}, {}), max abs error {:.3g}\n", r.passed ? "ok" : "FAILED",
                               r.name, r.n_mels, r.n_frames, r.max_abs_error);
      if (!r.passed) code = std::max(code, kExitFailure);
    }
  }
  return code;
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::manifest_invalid:
    case Errc::file_missing:
    case Errc::graph_invalid:
    case Errc::shape_mismatch:
    case Errc::window_mismatch:
      return kExitUsage;
    case Errc::device_unavailable:
    case Errc::device_overrun:
    case Errc::backend_failure:
    case Errc::io:
      return kExitFailure;
  }
  return kExitFailure;
}

int parse_and_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Real-time edge audio tagger and soak benchmark harness", "edge-tagger"};
  app.require_subcommand(1, 1);
  std::string log_level;
  app.add_option("--log-level", log_level, "Log level (trace, debug, info, warn, error, off); logs go to stderr")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run the live engine (and the control API)");
  run->add_option("--config", ra.config, fmt::format("Run config file (TOML or JSON); falls back to ${}", kConfigEnv));
  run->add_option("--model", ra.model, "Model manifest file");
  run->add_option("--source", ra.source, "Audio source: synthetic, file or live");
  run->add_option("--input", ra.input, "Audio file (file source) or raw s16 PCM device/FIFO, '-' for stdin (live)");
  run->add_option("--device-rate", ra.device_rate, "Sample rate of the live device or synthetic source (Hz)");
  run->add_option("--signal", ra.signal, "Synthetic signal: sine, silence or noise");
  run->add_option("--frequency", ra.frequency, "Synthetic sine frequency (Hz)");
  auto* headless = run->add_flag("--headless", ra.headless, "Headless scenario: no UI event stream");
  run->add_flag("--gui", ra.gui, "GUI scenario: serve the UI event stream")->excludes(headless);
  run->add_flag("--save-audio,!--no-save-audio", ra.save_audio, "Store every analysed window as WAV");
  run->add_option("--time-scale", ra.time_scale, "Wall seconds per stream second (synthetic/file sources only)")
      ->check(CLI::PositiveNumber);
  run->add_option("--duration", ra.duration, "Stream seconds to capture (default: until stopped)")
      ->check(CLI::PositiveNumber);
  run->add_option("--top-k", ra.top_k, "Predictions per window")->check(CLI::PositiveNumber);
  run->add_option("--queue-capacity", ra.queue_capacity, "Prediction queue capacity (drop-oldest)")
      ->check(CLI::PositiveNumber);
  run->add_option("--inference-delay", ra.inference_delay, "Extra stream seconds per inference (load injection)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--temperature", ra.temperature, "Temperature source: sysfs[:path], mock:v1,v2,... or none");
  run->add_option("--warning-threshold", ra.warning_threshold, "Thermal warning threshold (deg C)");
  run->add_option("--output-dir", ra.output_dir, "Directory for run telemetry and summaries");
  run->add_option("--recordings-dir", ra.recordings_dir, "Directory for saved windows");
  run->add_option("--run-id", ra.run_id, "Run identifier (default: start time)");
  run->add_option("--listen", ra.listen, "Control API address host:port (default 127.0.0.1:8787)");
  run->add_flag("--no-api", ra.no_api, "Do not start the control API");
  run->add_option("--models-dir", ra.models_dir, "Manifests offered by change_model (default: the model's directory)");
  run->add_option("--ui-dir", ra.ui_dir, "Static UI assets served under /");
  run->add_flag("--dump-config", ra.dump_config, "Print the effective configuration as TOML and exit");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Execute a benchmark plan (resumes an interrupted campaign)");
  bench_cmd->add_option("--plan", ba.plan, "Plan file (TOML or JSON)")->required();
  bench_cmd->add_option("--time-scale", ba.time_scale, "Override the plan's time scale")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--clock-mode", ba.clock_mode, "durations (real-time audio) or stream (compressed audio)")
      ->check(CLI::IsMember({"durations", "stream"}));
  bench_cmd->add_option("--reports-dir", ba.reports_dir, "Root of campaign report directories")->capture_default_str();
  bench_cmd->add_option("--listen", ba.listen, "Control API address for GUI-scenario entries");
  bench_cmd->add_flag("--no-api", ba.no_api, "Do not start the control API for GUI-scenario entries");
  bench_cmd->add_option("--models-dir", ba.models_dir, "Manifests offered by change_model");
  bench_cmd->add_option("--ui-dir", ba.ui_dir, "Static UI assets served under /");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Regenerate reports from persisted raw telemetry");
  report->add_option("dir", report_dir, "Campaign directory (reports/<id>) or single run directory")->required();

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check model manifests and golden log-mel vectors");
  validate->add_option("--model", va.models, "Manifest to load and warm up (repeatable)");
  validate->add_option("--golden", va.golden, "Golden vector directory holding index.json");
  validate->add_option("--tolerance", va.tolerance, "Max abs error for golden vectors")->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run, ra, log_level);
    if (bench_cmd->parsed()) return cmd_bench(bench_cmd, ba, log_level);
    if (report->parsed()) return cmd_report(report_dir, log_level);
    if (validate->parsed()) return cmd_validate(va, log_level);
  } catch (const Error& e) {
    log::init(log_level.empty() ? "info" : log_level);
    spdlog::error("[{}] {}", to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    log::init(log_level.empty() ? "info" : log_level);
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace edgetag::cli
