#include "edgetag/audio/resampler.hpp"
#include "edgetag/audio/windower.hpp"
#include "edgetag/bench/harness.hpp"
#include "edgetag/dsp/mel.hpp"
#include "edgetag/engine/engine.hpp"
#include "edgetag/telemetry/aggregate.hpp"
#include "edgetag/telemetry/collector.hpp"
#include "edgetag/telemetry/csv.hpp"
#include "edgetag/telemetry/temperature.hpp"
#include "golden.hpp"
#include "oracles.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <fcntl.h>
#include <netinet/in.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

extern char** environ;

using namespace edgetag;

namespace {

namespace fs = std::filesystem;

constexpr std::int64_t kSecond = 1'000'000'000;
constexpr std::int64_t kDayStart = 1'767'225'600 * kSecond;  // 2026-01-01T00:00:00Z

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_s;  // 0: no limit
  std::function<Outcome()> check;
};

Outcome fail(std::string detail) { return {false, std::move(detail)}; }

inference::ModelManifest manifest(const std::string& name) {
  return inference::load_manifest(testkit::fixture("models/" + name));
}

engine::EngineConfig fixture_run(const fs::path& dir, double duration_s, double time_scale) {
  engine::EngineConfig c;
  c.manifest = manifest("tiny-embedded.toml");
  c.source.kind = audio::SourceKind::synthetic;
  c.source.signal = audio::SyntheticSignal::noise;
  c.scenario = telemetry::Scenario::headless;
  c.duration_s = duration_s;
  c.time_scale = time_scale;
  c.temperature_source = "mock:50";
  c.output_dir = dir / "runs";
  c.recordings_dir = dir / "recordings";
  c.run_id = "run";
  c.wall_start_ns = kDayStart;
  return c;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome window_math() {
  std::mt19937 rng(7357);
  const int rate = 1000;
  int half_overlap_trials = 0;
  for (int trial = 0; trial < 50; ++trial) {
    audio::WindowSpec spec;
    spec.target_rate_hz = rate;
    spec.window_s = std::uniform_int_distribution<int>(2, 40)(rng) / 2.0;
    spec.hop_s = trial % 2 == 0 ? spec.window_s / 2.0
                                : std::uniform_int_distribution<int>(1, static_cast<int>(spec.window_s * 2))(rng) / 2.0;
    const auto samples = static_cast<std::int64_t>(std::uniform_int_distribution<int>(0, 200)(rng)) * rate / 2;
    const auto chunk = std::uniform_int_distribution<std::size_t>(37, 5000)(rng);

    std::vector<audio::PcmChunk> chunks;
    for (std::int64_t pos = 0; pos < samples;) {
      audio::PcmChunk c;
      c.sample_rate_hz = rate;
      c.start_time_ns = pos * kSecond / rate;
      const auto n = std::min<std::int64_t>(static_cast<std::int64_t>(chunk), samples - pos);
      for (std::int64_t i = 0; i < n; ++i) c.samples.push_back(static_cast<float>(pos + i) / 1048576.0f);
      pos += n;
      chunks.push_back(std::move(c));
    }
    const auto windows = audio::window_stream(chunks, spec);

    const double d = static_cast<double>(samples) / rate;
    const std::size_t expected =
        d >= spec.window_s ? static_cast<std::size_t>(std::floor((d - spec.window_s) / spec.hop_s + 1e-9)) + 1 : 0;
    if (windows.size() != expected)
      return fail(fmt::format("D={} W={} H={}: {} windows, expected {}", d, spec.window_s, spec.hop_s, windows.size(),
                              expected));
    const auto hop = spec.hop_samples();
    const auto overlap = spec.window_samples() - hop;
    for (std::size_t k = 0; k + 1 < windows.size(); ++k)
      if (std::memcmp(windows[k].samples->data() + hop, windows[k + 1].samples->data(), overlap * sizeof(float)) != 0)
        return fail(fmt::format("overlap mismatch between windows {} and {} (W={} H={})", k, k + 1, spec.window_s,
                                spec.hop_s));
    if (2 * hop == spec.window_samples() && windows.size() >= 2) ++half_overlap_trials;
  }
  return {true, fmt::format("50 triples, {} with 50% overlap checked", half_overlap_trials)};
}

Outcome dsp_golden() {
  const auto cases = testkit::load_golden_cases();
  if (cases.size() != 5) return fail(fmt::format("{} golden cases, expected 5", cases.size()));
  const auto cfg = dsp::mel_preset("panns-64");
  double worst = 0.0;
  for (const auto& c : cases) {
    if (c.window.size() != 320000) return fail(fmt::format("{}: {} samples", c.name, c.window.size()));
    const auto got = dsp::log_mel(c.window, 32000, cfg, 320000);
    if (got.n_mels != 64 || got.n_frames != 1001 || c.n_mels != 64 || c.n_frames != 1001)
      return fail(fmt::format("{}: shape ({}, {})", c.name, got.n_mels, got.n_frames));
    for (std::size_t i = 0; i < got.values.size(); ++i)
      worst = std::max(worst, std::abs(static_cast<double>(got.values[i]) - c.expected[i]));
  }
  if (worst > 1e-4) return fail(fmt::format("max abs error {:.3g}", worst));
  return {true, fmt::format("5 windows, shape (64, 1001), max abs error {:.2g}", worst)};
}

Outcome resampler() {
  std::vector<float> tone(441000);
  for (std::size_t i = 0; i < tone.size(); ++i)
    tone[i] = static_cast<float>(0.9 * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) / 44100.0));
  const auto out = audio::resample(tone, 44100, 32000);
  if (out.size() != 320000) return fail(fmt::format("{} output samples", out.size()));
  const double peak = testkit::fft_peak_hz(out, 32000);
  if (std::abs(peak - 1000.0) > 2.0) return fail(fmt::format("peak at {:.3f} Hz", peak));

  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> noise(100000);
  for (auto& v : noise) v = u(rng);
  const auto same = audio::resample(noise, 32000, 32000);
  if (same.size() != noise.size() || std::memcmp(same.data(), noise.data(), noise.size() * sizeof(float)) != 0)
    return fail("equal-rate resampling is not bit-exact");
  return {true, fmt::format("peak {:.3f} Hz, identity bit-exact", peak)};
}

Outcome aggregation() {
  std::mt19937_64 rng(86400);
  std::uniform_real_distribution<double> temp(40.0, 90.0), lat(1.0, 500.0);
  std::vector<telemetry::TelemetryRecord> records;
  std::vector<testkit::RefSample> samples;
  for (std::int64_t t = 0; t < 24 * 3600; t += 5) {
    telemetry::TelemetryRecord r;
    r.wall_time_ns = kDayStart + t * kSecond;
    r.model_id = "fixture";
    r.cpu_temp_c = temp(rng);
    r.inference_ms = lat(rng);
    r.total_ms = *r.inference_ms + 1.0;
    samples.push_back({r.wall_time_ns, "fixture", r.cpu_temp_c, r.inference_ms});
    records.push_back(std::move(r));
  }
  const auto got = telemetry::aggregate(records);
  const auto want = testkit::brute_force_buckets(samples, telemetry::kDefaultBucketNs);
  if (got.size() != 144) return fail(fmt::format("{} buckets", got.size()));
  if (want.size() != got.size()) return fail("oracle bucket count differs");
  const auto same = [](const std::optional<telemetry::Stats>& a, const std::optional<testkit::RefStats>& b) {
    return a && b && a->mean == b->mean && a->min == b->min && a->max == b->max && a->p95 == b->p95;
  };
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i].count != 120) return fail(fmt::format("bucket {} holds {} records", i, got[i].count));
    if (got[i].bucket_start_ns != want[i].start_ns || got[i].count != want[i].count ||
        !same(got[i].temp, want[i].temp) || !same(got[i].latency, want[i].latency))
      return fail(fmt::format("bucket {} differs from the brute-force oracle", i));
  }
  return {true, "144 buckets x 120 records, stats identical to oracle"};
}

Outcome end_to_end(const fs::path& dir) {
  engine::Engine eng(fixture_run(dir / "e2e", 300.0, 0.01));
  const auto s = eng.run();
  if (std::abs(s.predictions - 59) > 1) return fail(fmt::format("{} predictions", s.predictions));
  if (s.counters.windows_dropped != 0) return fail(fmt::format("{} drops", s.counters.windows_dropped));
  try {
    const auto raw_text = slurp(s.raw_csv);
    if (raw_text.substr(0, raw_text.find('\n')) != telemetry::kRawCsvHeader) return fail("raw CSV header");
    const auto raw = telemetry::parse_raw_csv(raw_text);
    std::int64_t with_latency = 0;
    for (const auto& r : raw) with_latency += r.inference_ms ? 1 : 0;
    if (with_latency != s.predictions) return fail("raw CSV rows do not match predictions");
    const auto agg_text = slurp(s.agg_csv);
    if (agg_text.substr(0, agg_text.find('\n')) != telemetry::kAggCsvHeader) return fail("agg CSV header");
    const auto agg = telemetry::parse_agg_csv(agg_text);
    if (agg != telemetry::aggregate(raw)) return fail("agg CSV does not re-aggregate from raw CSV");
  } catch (const std::exception& e) {
    return fail(fmt::format("CSV schema: {}", e.what()));
  }
  return {true, fmt::format("{} predictions, 0 drops, CSVs valid ({:.1f} s wall)", s.predictions, s.wall_duration_s)};
}

Outcome overload(const fs::path& dir) {
  auto cfg = fixture_run(dir / "overload", 120.0, 0.02);
  cfg.inference_delay_s = 7.0;
  cfg.predict_queue_capacity = 2;
  std::mutex m;
  std::vector<std::int64_t> order;
  engine::EngineHooks hooks;
  hooks.on_prediction = [&](const engine::Prediction& p) {
    std::lock_guard lock(m);
    order.push_back(p.window_index);
  };
  engine::Engine eng(cfg, hooks);
  const auto s = eng.run();
  const auto oracle = testkit::simulate_drop_oldest(static_cast<int>(s.windows_emitted), 10.0, 5.0, 7.0, 2);
  if (s.exit_reason != "end_of_stream" || s.stream_duration_s < 120.0 - 1e-9)
    return fail(fmt::format("engine ended early ({}, {:.1f} s)", s.exit_reason, s.stream_duration_s));
  if (s.counters.windows_dropped <= 0) return fail("no drops");
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i] <= order[i - 1]) return fail("prediction order not strictly increasing");
  if (std::abs(s.counters.windows_dropped - oracle.dropped) > 1)
    return fail(fmt::format("{} drops, queue oracle {}", s.counters.windows_dropped, oracle.dropped));
  return {true, fmt::format("{} windows, {} dropped (oracle {}), {} served in order", s.windows_emitted,
                            s.counters.windows_dropped, oracle.dropped, order.size())};
}

Outcome relative_ordering(const fs::path& dir) {
  bench::BenchmarkPlan plan;
  plan.campaign_id = "ordering";
  for (const char* name : {"small.toml", "large.toml"}) {
    bench::PlanEntry e;
    e.manifest = manifest(name);
    e.run_duration_s = 505.0;  // 100 windows
    plan.entries.push_back(e);
  }
  plan.idle_between_s = 0.0;
  plan.time_scale = 0.01;
  plan.clock_mode = bench::ClockMode::stream;
  plan.temperature_source = "mock:50";
  plan.source.kind = audio::SourceKind::synthetic;
  plan.source.signal = audio::SyntheticSignal::noise;
  const auto result = bench::execute_plan(plan, {.reports_root = dir / "reports"});
  const auto& small = result.report->entries.at(0);
  const auto& large = result.report->entries.at(1);
  if (small.predictions != 100 || large.predictions != 100)
    return fail(fmt::format("{} / {} windows", small.predictions, large.predictions));
  const auto detail = fmt::format("small mean {:.2f} p95 {:.2f} ms, large mean {:.2f} p95 {:.2f} ms",
                                  *small.latency_mean_ms, *small.latency_p95_ms, *large.latency_mean_ms,
                                  *large.latency_p95_ms);
  if (!(*small.latency_mean_ms < *large.latency_mean_ms && *small.latency_p95_ms < *large.latency_p95_ms))
    return fail(detail);
  const auto& rows = result.report->rankings.at("headless");
  if (rows.at(0).summary.model_id != "small") return fail("ranking does not put small first");
  return {true, detail};
}

Outcome thermal_events() {
  // bucket maxima 70, 86, 90, 84.9, 85.0 (at threshold), 60; one implausible reading
  const std::vector<double> bucket_max{70.0, 86.0, 90.0, 84.9, 85.0, 60.0};
  std::vector<double> series;
  for (std::size_t b = 0; b < bucket_max.size(); ++b)
    for (int i = 0; i < 120; ++i) series.push_back(i == 60 ? bucket_max[b] : bucket_max[b] - 5.0);
  series[5 * 120 + 10] = 150.0;

  telemetry::TemperatureMonitor monitor(std::make_unique<telemetry::MockTemperature>(series));
  std::mutex m;
  std::vector<telemetry::ThermalEvent> streamed;
  telemetry::TelemetryCollector::Options options;
  options.on_thermal_event = [&](const telemetry::ThermalEvent& e) {
    std::lock_guard lock(m);
    streamed.push_back(e);
  };
  telemetry::TelemetryCollector collector(options);
  for (std::size_t i = 0; i < series.size(); ++i) {
    telemetry::TelemetryRecord r;
    r.wall_time_ns = kDayStart + static_cast<std::int64_t>(i) * 5 * kSecond;
    r.model_id = "fixture";
    r.cpu_temp_c = monitor.sample();
    collector.post(std::move(r));
  }
  collector.close();

  using telemetry::Crossing;
  const auto at = [](std::size_t b) { return kDayStart + static_cast<std::int64_t>(b) * 600 * kSecond; };
  const std::vector<telemetry::ThermalEvent> expected{{1, at(1), Crossing::up, 86.0},
                                                      {3, at(3), Crossing::down, 84.9},
                                                      {4, at(4), Crossing::up, 85.0},
                                                      {5, at(5), Crossing::down, 60.0}};
  if (monitor.rejected() != 1) return fail(fmt::format("{} rejected readings", monitor.rejected()));
  if (streamed != expected) return fail(fmt::format("{} streamed events differ", streamed.size()));
  if (telemetry::thermal_events(collector.buckets()) != expected) return fail("batch events differ");
  std::string list;
  for (const auto& e : expected) list += fmt::format("{}@{} ", telemetry::to_string(e.direction), e.bucket_index);
  return {true, "events " + list + "(streamed and batch)"};
}

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

Outcome headless_without_ui(const fs::path& dir, bool others_passed) {
  const auto out = dir / "headless";
  fs::create_directories(out);
  const int port = free_port();
  std::vector<std::string> args{EDGE_TAGGER_BIN,
                                "run",
                                "--model",
                                testkit::fixture("models/tiny-embedded.toml").string(),
                                "--source",
                                "synthetic",
                                "--headless",
                                "--duration",
                                "60",
                                "--time-scale",
                                "0.02",
                                "--temperature",
                                "none",
                                "--listen",
                                fmt::format("127.0.0.1:{}", port),
                                "--ui-dir",
                                (out / "no-ui-assets").string(),
                                "--output-dir",
                                out.string(),
                                "--run-id",
                                "headless"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  const auto log = (out / "stderr.txt").string();
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 2, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) return fail("cannot start edge-tagger");

  bool api_ok = false;
  bool events_off = false;
  bool root_plain = false;
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 100 && !api_ok; ++i) {
    if (auto res = client.Get("/api/status"); res && res->status == 200) {
      api_ok = nlohmann::json::parse(res->body)["scenario"] == "headless";
      auto ev = client.Get("/api/events");
      events_off = ev && ev->status == 404;
      auto root = client.Get("/");
      root_plain = root && root->status == 200 && root->body.find("no UI") != std::string::npos;
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return fail("edge-tagger run exited with failure: " + slurp(log));
  const auto summary = nlohmann::json::parse(slurp(out / "headless/run_summary.json"));
  if (summary["predictions"] != 11) return fail(fmt::format("{} predictions", summary["predictions"].dump()));
  if (!api_ok || !events_off || !root_plain) return fail("control API did not serve headless mode without UI assets");
  if (!others_passed) return fail("headless run ok, but other criteria failed");
  return {true, "headless run without UI assets: 11 predictions, events disabled, no secondary component built"};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const auto dir = testkit::make_temp_dir("acceptance");
  bool all = true;
  const std::vector<Criterion> criteria{
      {"window math", 10.0, window_math},
      {"dsp golden vectors", 5.0, dsp_golden},
      {"resampler", 5.0, resampler},
      {"aggregation", 10.0, aggregation},
      {"end-to-end compressed run", 300.0, [&] { return end_to_end(dir); }},
      {"overload behavior", 0.0, [&] { return overload(dir); }},
      {"relative ordering", 0.0, [&] { return relative_ordering(dir); }},
      {"thermal events", 0.0, thermal_events},
      {"headless without ui", 0.0, [&] { return headless_without_ui(dir, all); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = fail(fmt::format("exception: {}", e.what()));
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && c.limit_s > 0.0 && elapsed > c.limit_s) {
      o.pass = false;
      o.detail += fmt::format("; runtime {:.2f} s exceeds {:.0f} s", elapsed, c.limit_s);
    }
    if (!o.pass) {
      ++failed;
      all = false;
    }
    std::cout << fmt::format("{} {}: {} [{:.2f} s]", o.pass ? "PASS" : "FAIL", c.name, o.detail, elapsed) << std::endl;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - static_cast<std::size_t>(failed), criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
