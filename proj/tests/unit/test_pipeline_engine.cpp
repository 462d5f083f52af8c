#include <gtest/gtest.h>

#include "edgetag/audio/resampler.hpp"
#include "edgetag/audio/wav.hpp"
#include "edgetag/engine/bounded_queue.hpp"
#include "edgetag/engine/engine.hpp"
#include "edgetag/engine/recorder.hpp"
#include "edgetag/error.hpp"
#include "edgetag/telemetry/csv.hpp"
#include "golden.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <deque>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

using namespace edgetag;
using namespace edgetag::engine;

namespace {

constexpr std::int64_t kSecond = 1'000'000'000;
constexpr std::int64_t kWallStart = 1'767'225'600 * kSecond;  // 2026-01-01T00:00:00Z

std::filesystem::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "edgetag_engine_test" /
             (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inference::ModelManifest manifest(const std::string& name) {
  return inference::load_manifest(testkit::fixture("models/" + name));
}

EngineConfig fast_config(const std::filesystem::path& dir, double duration_s, double time_scale = 0.01) {
  EngineConfig c;
  c.manifest = manifest("tiny-embedded.toml");
  c.source.kind = audio::SourceKind::synthetic;
  c.source.signal = audio::SyntheticSignal::noise;
  c.duration_s = duration_s;
  c.time_scale = time_scale;
  c.temperature_source = "mock:50";
  c.output_dir = dir / "runs";
  c.recordings_dir = dir / "recordings";
  c.run_id = "run";
  c.wall_start_ns = kWallStart;
  return c;
}

struct Collected {
  std::mutex mutex;
  std::vector<Prediction> predictions;

  EngineHooks hooks() {
    EngineHooks h;
    h.on_prediction = [this](const Prediction& p) {
      std::lock_guard lock(mutex);
      predictions.push_back(p);
    };
    return h;
  }
  std::vector<Prediction> get() {
    std::lock_guard lock(mutex);
    return predictions;
  }
  std::size_t size() {
    std::lock_guard lock(mutex);
    return predictions.size();
  }
};

std::size_t count_files(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) ++n;
  return n;
}

bool wait_until(const std::function<bool()>& pred, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!pred()) {
    if (std::chrono::steady_clock::now() > deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return true;
}

Errc error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no edgetag::Error thrown";
  return Errc::config;
}

}  // namespace

TEST(BoundedQueueTest, EvictsOldestWhenFull) {
  BoundedQueue<int> q(2);
  EXPECT_FALSE(q.push(1).has_value());
  EXPECT_FALSE(q.push(2).has_value());
  EXPECT_EQ(q.push(3), 1);
  EXPECT_EQ(q.try_pop(), 2);
  EXPECT_EQ(q.try_pop(), 3);
  EXPECT_FALSE(q.try_pop().has_value());
  EXPECT_THROW(BoundedQueue<int>(0), std::invalid_argument);
}

TEST(BoundedQueueTest, RandomOperationsMatchModel) {
  std::mt19937 rng(5);
  for (std::size_t cap = 1; cap <= 5; ++cap) {
    BoundedQueue<int> q(cap);
    std::deque<int> model;
    for (int i = 0; i < 2000; ++i) {
      if (rng() % 3) {
        const auto evicted = q.push(i);
        std::optional<int> expected;
        if (model.size() == cap) {
          expected = model.front();
          model.pop_front();
        }
        model.push_back(i);
        EXPECT_EQ(evicted, expected);
      } else {
        std::optional<int> expected;
        if (!model.empty()) {
          expected = model.front();
          model.pop_front();
        }
        EXPECT_EQ(q.try_pop(), expected);
      }
      ASSERT_LE(q.size(), cap);
    }
    EXPECT_LE(q.high_water(), cap);
  }
}

TEST(BoundedQueueTest, CloseDrainsThenEnds) {
  BoundedQueue<int> q(3);
  q.push(1);
  q.push(2);
  q.close();
  EXPECT_EQ(q.push(9), 9);
  std::stop_source stop;
  EXPECT_EQ(q.pop(stop.get_token()), 1);
  EXPECT_EQ(q.pop(stop.get_token()), 2);
  EXPECT_FALSE(q.pop(stop.get_token()).has_value());
  EXPECT_TRUE(q.drained());
}

TEST(BoundedQueueTest, StopAndWakeUnblockPop) {
  BoundedQueue<int> q(1);
  std::stop_source stop;
  std::thread waker([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    q.wake();
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    stop.request_stop();
  });
  EXPECT_FALSE(q.pop(stop.get_token()).has_value());
  EXPECT_FALSE(stop.stop_requested());
  EXPECT_FALSE(q.pop(stop.get_token()).has_value());
  EXPECT_TRUE(stop.stop_requested());
  waker.join();
}

TEST(StreamClockTest, ScalesStreamTime) {
  StreamClock clock(0.5, kWallStart);
  const auto t = clock.steady_start() + std::chrono::seconds(1);
  EXPECT_EQ(clock.stream_ns(t), 2 * kSecond);
  EXPECT_EQ(clock.steady_at(2 * kSecond), t);
  EXPECT_EQ(clock.wall_ns_at(3 * kSecond), kWallStart + 3 * kSecond);
  EXPECT_EQ(clock.scaled(4.0), std::chrono::seconds(2));
  EXPECT_THROW(StreamClock(0.0), Error);
}

TEST(RecorderTest, WindowRoundTripsAndNamesCarryStartTime) {
  const auto dir = scratch();
  std::vector<float> samples(320000);
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& s : samples) s = u(rng);
  const auto w0 = audio::make_window(samples, 32000, 0, 0);
  const auto w1 = audio::make_window(samples, 32000, 1, 5 * kSecond);
  const auto p0 = write_audio(w0, dir, kWallStart);
  const auto p1 = write_audio(w1, dir, kWallStart + 5 * kSecond);
  EXPECT_EQ(p0.filename().string(), "20260101T000000.000Z_0.wav");
  EXPECT_EQ(p1.filename().string(), "20260101T000005.000Z_1.wav");
  const auto back = audio::read_wav(p0);
  EXPECT_EQ(back.sample_rate_hz, 32000);
  EXPECT_EQ(back.channels, 1);
  EXPECT_EQ(back.samples.size(), 320000u);
  EXPECT_EQ(back.samples, samples);
}

TEST(RecorderTest, UnwritableDirectoryThrowsIo) {
  const auto dir = scratch();
  std::ofstream(dir / "blocker") << "x";
  const auto w = audio::make_window(std::vector<float>(10), 32000);
  EXPECT_EQ(error_code([&] { write_audio(w, dir / "blocker" / "sub", 0); }), Errc::io);
}

TEST(PredictionTest, JsonRoundTrip) {
  Prediction p;
  p.model_id = "m";
  p.window_index = 7;
  p.window_start_ns = kWallStart + 35 * kSecond;
  p.top_k = {{3, "Speech", 0.75f}, {0, "Music", 0.5f}};
  p.recording_time_s = 5.0;
  p.inference_time_ms = 2.5;
  p.total_time_ms = 3.25;
  const auto doc = to_json(p);
  EXPECT_EQ(doc["window_start"], "2026-01-01T00:00:35.000000000Z");
  const auto back = prediction_from_json(doc);
  EXPECT_EQ(back.model_id, p.model_id);
  EXPECT_EQ(back.window_index, p.window_index);
  EXPECT_EQ(back.window_start_ns, p.window_start_ns);
  ASSERT_EQ(back.top_k.size(), 2u);
  EXPECT_EQ(back.top_k[1].label, "Music");
  EXPECT_EQ(back.top_k[0].score, 0.75f);
  EXPECT_EQ(back.total_time_ms, 3.25);
}

TEST(EngineConfigTest, RejectsInvalidValues) {
  const auto dir = scratch();
  auto bad = [&](auto mutate) {
    auto c = fast_config(dir, 20);
    mutate(c);
    return error_code([&] { c.validate(); });
  };
  EXPECT_EQ(bad([](EngineConfig& c) { c.predict_queue_capacity = 0; }), Errc::config);
  EXPECT_EQ(bad([](EngineConfig& c) { c.top_k = 0; }), Errc::config);
  EXPECT_EQ(bad([](EngineConfig& c) { c.time_scale = 0; }), Errc::config);
  EXPECT_EQ(bad([](EngineConfig& c) { c.duration_s = -1.0; }), Errc::config);
  EXPECT_EQ(bad([](EngineConfig& c) { c.run_id = "../escape"; }), Errc::config);
  EXPECT_EQ(bad([](EngineConfig& c) { c.window_spec.hop_s = 0; }), Errc::config);
  EXPECT_EQ(bad([](EngineConfig& c) {
              c.source.kind = audio::SourceKind::live_device;
              c.time_scale = 0.5;
            }),
            Errc::config);
  EXPECT_NO_THROW(fast_config(dir, 20).validate());
}

TEST(EngineTest, SixtySecondRunGivesElevenPredictions) {
  const auto dir = scratch();
  Collected got;
  Engine engine(fast_config(dir, 60), got.hooks());
  const auto summary = engine.run();
  const auto preds = got.get();
  ASSERT_EQ(preds.size(), 11u);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].window_index, static_cast<std::int64_t>(i));
    EXPECT_EQ(preds[i].window_start_ns, kWallStart + static_cast<std::int64_t>(i) * 5 * kSecond);
    EXPECT_EQ(preds[i].model_id, "tiny-embedded");
    EXPECT_EQ(preds[i].top_k.size(), 3u);
    EXPECT_GE(preds[i].top_k[0].score, preds[i].top_k[1].score);
    EXPECT_GE(preds[i].top_k[1].score, preds[i].top_k[2].score);
    EXPECT_LE(preds[i].inference_time_ms, preds[i].total_time_ms);
  }
  EXPECT_EQ(summary.predictions, 11);
  EXPECT_EQ(summary.windows_emitted, 11);
  EXPECT_EQ(summary.counters, OverrunCounts{});
  EXPECT_EQ(summary.exit_reason, "end_of_stream");
  EXPECT_NEAR(summary.stream_duration_s, 60.0, 1e-9);
}

TEST(EngineTest, CadenceFollowsHop) {
  const auto dir = scratch();
  Collected got;
  Engine engine(fast_config(dir, 60, 0.02), got.hooks());
  engine.run();
  const auto preds = got.get();
  ASSERT_EQ(preds.size(), 11u);
  EXPECT_NEAR(preds[0].recording_time_s, 10.0, 1.0);
  for (std::size_t i = 1; i < preds.size(); ++i) EXPECT_NEAR(preds[i].recording_time_s, 5.0, 1.0) << i;
}

TEST(EngineTest, FiveMinuteRunIsLive) {
  const auto dir = scratch();
  Collected got;
  Engine engine(fast_config(dir, 300), got.hooks());
  const auto summary = engine.run();
  EXPECT_NEAR(static_cast<double>(got.size()), 59.0, 1.0);
  EXPECT_EQ(summary.counters.windows_dropped, 0);
  const auto preds = got.get();
  for (std::size_t i = 1; i < preds.size(); ++i) EXPECT_GT(preds[i].window_index, preds[i - 1].window_index);
}

TEST(EngineTest, OverloadDropsOldestLikeQueueOracle) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 120, 0.02);
  cfg.inference_delay_s = 7.0;
  Collected got;
  Engine engine(cfg, got.hooks());
  const auto summary = engine.run();

  const auto oracle = testkit::simulate_drop_oldest(23, 10.0, 5.0, 7.0, 2);
  EXPECT_GT(summary.counters.windows_dropped, 0);
  EXPECT_NEAR(static_cast<double>(summary.counters.windows_dropped), oracle.dropped, 1.0);
  EXPECT_EQ(summary.windows_emitted, 23);
  const auto preds = got.get();
  EXPECT_EQ(static_cast<std::int64_t>(preds.size()) + summary.counters.windows_dropped, 23);
  for (std::size_t i = 1; i < preds.size(); ++i) EXPECT_GT(preds[i].window_index, preds[i - 1].window_index);
  for (std::size_t i = 1; i < preds.size(); ++i) EXPECT_NEAR(preds[i].recording_time_s, 7.0, 1.0) << i;
}

TEST(EngineTest, NoRecordingsWhenSaveAudioOff) {
  const auto dir = scratch();
  Engine engine(fast_config(dir, 30));
  const auto summary = engine.run();
  EXPECT_EQ(summary.predictions, 5);
  EXPECT_EQ(count_files(dir / "recordings"), 0u);
}

TEST(EngineTest, RecordingsMatchResampledStream) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 20);
  cfg.save_audio = true;
  Engine engine(cfg);
  const auto summary = engine.run();
  ASSERT_EQ(summary.windows_emitted, 3);

  auto source = audio::open_source(cfg.source);
  std::vector<float> raw;
  while (raw.size() < 20u * 44100u) {
    auto chunk = source->read(20u * 44100u - raw.size());
    raw.insert(raw.end(), chunk->samples.begin(), chunk->samples.end());
  }
  const auto reference = audio::resample(raw, 44100, 32000);

  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir / "recordings" / "run")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  ASSERT_EQ(files.size(), 3u);
  for (std::size_t k = 0; k < files.size(); ++k) {
    EXPECT_EQ(files[k].filename().string(), recording_filename(kWallStart + static_cast<std::int64_t>(k) * 5 * kSecond,
                                                               static_cast<std::int64_t>(k)));
    const auto wav = audio::read_wav(files[k]);
    ASSERT_EQ(wav.samples.size(), 320000u);
    EXPECT_EQ(wav.sample_rate_hz, 32000);
    const auto begin = reference.begin() + static_cast<std::ptrdiff_t>(k * 160000);
    EXPECT_TRUE(std::equal(wav.samples.begin(), wav.samples.end(), begin)) << k;
  }
}

TEST(EngineTest, WriteFailuresDoNotDisturbPredictions) {
  const auto dir = scratch();
  auto plain_cfg = fast_config(dir, 40);
  Collected plain;
  Engine(plain_cfg, plain.hooks()).run();

  auto cfg = fast_config(dir, 40);
  cfg.run_id = "faulty";
  cfg.save_audio = true;
  std::ofstream(dir / "blocked") << "not a directory";
  cfg.recordings_dir = dir / "blocked";
  Collected faulty;
  const auto summary = Engine(cfg, faulty.hooks()).run();

  EXPECT_EQ(summary.counters.write_failures, 7);
  const auto a = plain.get();
  const auto b = faulty.get();
  ASSERT_EQ(a.size(), 7u);
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].window_index, b[i].window_index);
    EXPECT_EQ(a[i].window_start_ns, b[i].window_start_ns);
    EXPECT_EQ(a[i].model_id, b[i].model_id);
    ASSERT_EQ(a[i].top_k.size(), b[i].top_k.size());
    for (std::size_t j = 0; j < a[i].top_k.size(); ++j) {
      EXPECT_EQ(a[i].top_k[j].index, b[i].top_k[j].index);
      EXPECT_EQ(a[i].top_k[j].score, b[i].top_k[j].score);
    }
  }
}

TEST(EngineTest, SwapTakesEffectBetweenWindows) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 120, 0.02);
  Collected got;
  Engine engine(cfg, got.hooks());
  engine.start();
  ASSERT_TRUE(wait_until([&] { return got.size() >= 3; }, std::chrono::seconds(10)));
  const auto ack = engine.swap_model(manifest("small.toml"));
  const std::size_t after_ack = got.size();
  EXPECT_TRUE(ack.accepted) << ack.error;
  EXPECT_EQ(ack.model_id, "small");
  EXPECT_GT(ack.latency_ms, 0.0);
  EXPECT_EQ(engine.status().model_id, "small");
  const auto summary = engine.wait();

  const auto preds = got.get();
  ASSERT_EQ(preds.size(), 23u);
  std::size_t first_b = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].model_id == "small") {
      first_b = i;
      break;
    }
  ASSERT_LT(first_b, preds.size());
  EXPECT_LE(first_b, after_ack);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].model_id, i < first_b ? "tiny-embedded" : "small") << i;
    EXPECT_EQ(preds[i].window_index, static_cast<std::int64_t>(i));
  }
  EXPECT_EQ(summary.model_ids, (std::vector<std::string>{"tiny-embedded", "small"}));
}

TEST(EngineTest, RejectedAndIdempotentSwaps) {
  const auto dir = scratch();
  Engine engine(fast_config(dir, 600, 0.02));
  engine.start();

  auto missing = manifest("small.toml");
  missing.primary_model_path = dir / "nope.onnx";
  const auto rejected = engine.swap_model(missing);
  EXPECT_FALSE(rejected.accepted);
  EXPECT_NE(rejected.error.find("file-missing"), std::string::npos) << rejected.error;
  EXPECT_EQ(rejected.model_id, "tiny-embedded");
  EXPECT_EQ(engine.status().model_id, "tiny-embedded");

  const auto broken = engine.swap_model(manifest("mismatch.toml"));
  EXPECT_FALSE(broken.accepted);

  const auto same = engine.swap_model(manifest("tiny-embedded.toml"));
  EXPECT_TRUE(same.accepted);
  EXPECT_EQ(same.model_id, "tiny-embedded");

  engine.stop();
  const auto summary = engine.wait();
  EXPECT_EQ(summary.model_ids, std::vector<std::string>{"tiny-embedded"});
  EXPECT_FALSE(engine.swap_model(manifest("small.toml")).accepted);
}

TEST(EngineTest, TopKAndSaveAudioToggles) {
  const auto dir = scratch();
  Collected got;
  std::atomic<bool> toggled{false};
  auto cfg = fast_config(dir, 120, 0.02);
  Engine engine(cfg, got.hooks());
  engine.start();
  ASSERT_TRUE(wait_until([&] { return got.size() >= 2; }, std::chrono::seconds(10)));
  engine.set_top_k(1);
  engine.set_save_audio(true);
  const std::size_t mark = got.size();
  EXPECT_TRUE(engine.status().save_audio);
  EXPECT_EQ(engine.status().top_k, 1u);
  EXPECT_THROW(engine.set_top_k(0), Error);
  EXPECT_THROW(engine.set_top_k(528), Error);
  ASSERT_TRUE(wait_until([&] { return got.size() >= mark + 3; }, std::chrono::seconds(10)));
  engine.set_save_audio(false);
  engine.stop();
  engine.wait();
  const auto preds = got.get();
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(preds[i].top_k.size(), 3u);
  for (std::size_t i = mark + 1; i < preds.size(); ++i) EXPECT_EQ(preds[i].top_k.size(), 1u) << i;
  EXPECT_GT(count_files(dir / "recordings"), 0u);
  EXPECT_FALSE(engine.status().save_audio);
}

TEST(EngineTest, StatusReflectsLatestPrediction) {
  const auto dir = scratch();
  Collected got;
  Engine engine(fast_config(dir, 60, 0.05), got.hooks());
  engine.start();
  const auto cold = engine.status();
  EXPECT_FALSE(cold.last.has_value());
  EXPECT_GT(cold.uptime_s, 0.0);
  EXPECT_TRUE(cold.running);
  EXPECT_EQ(cold.cpu_temp_c, 50.0);
  EXPECT_EQ(cold.model_id, "tiny-embedded");
  engine.wait();
  const auto warm = engine.status();
  ASSERT_TRUE(warm.last.has_value());
  EXPECT_EQ(warm.last->window_index, got.get().back().window_index);
  EXPECT_EQ(warm.predictions, 11);
  EXPECT_FALSE(warm.running);
  const auto doc = to_json(warm);
  EXPECT_EQ(doc["last"]["window_index"], 10);
  EXPECT_EQ(doc["counters"]["windows_dropped"], 0);
}

TEST(EngineTest, StopEndsWithinOneHop) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 3600, 0.1);
  cfg.inference_delay_s = 3.0;
  Engine engine(cfg);
  engine.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(1500));
  const auto t0 = std::chrono::steady_clock::now();
  engine.stop();
  const auto summary = engine.wait();
  const double took_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(took_s, 0.5);
  EXPECT_EQ(summary.exit_reason, "stopped");
  EXPECT_GT(summary.predictions, 0);
}

TEST(EngineTest, TelemetryOutputsAreSchemaValid) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 120);
  cfg.temperature_source = "mock:60,61,62,63";
  Engine engine(cfg);
  const auto summary = engine.run();

  const auto raw = telemetry::read_raw_csv(summary.raw_csv);
  std::size_t with_latency = 0;
  for (const auto& r : raw) {
    EXPECT_EQ(r.model_id, "tiny-embedded");
    EXPECT_TRUE(r.cpu_temp_c.has_value());
    if (r.inference_ms) {
      ++with_latency;
      EXPECT_LE(*r.inference_ms, *r.total_ms);
    }
  }
  EXPECT_EQ(with_latency, static_cast<std::size_t>(summary.predictions));
  EXPECT_EQ(summary.predictions, 23);

  std::ifstream agg_in(summary.agg_csv);
  const std::string agg((std::istreambuf_iterator<char>(agg_in)), std::istreambuf_iterator<char>());
  const auto buckets = telemetry::parse_agg_csv(agg);
  std::size_t total = 0;
  for (const auto& b : buckets) total += b.count;
  EXPECT_EQ(total, raw.size());
  EXPECT_EQ(agg, engine.agg_csv());

  std::ifstream summary_in(engine.run_dir() / "run_summary.json");
  const auto doc = nlohmann::json::parse(summary_in);
  EXPECT_EQ(doc["predictions"], 23);
  EXPECT_EQ(doc["run_id"], "run");
  EXPECT_EQ(doc["counters"]["windows_dropped"], 0);
}

TEST(EngineTest, IdlePeriodsGetTemperatureOnlyRecords) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 9.9, 0.02);
  cfg.temperature_source = "mock:55";
  Engine engine(cfg);
  const auto summary = engine.run();
  EXPECT_EQ(summary.predictions, 0);
  const auto raw = telemetry::read_raw_csv(summary.raw_csv);
  ASSERT_GE(raw.size(), 1u);
  for (const auto& r : raw) {
    EXPECT_EQ(r.cpu_temp_c, 55.0);
    EXPECT_FALSE(r.inference_ms.has_value());
  }
}

TEST(EngineTest, MissingThermalInterfaceDegradesToLatencyOnly) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 30);
  cfg.temperature_source = "sysfs:" + (dir / "no_such_zone").string();
  const auto summary = Engine(cfg).run();
  EXPECT_EQ(summary.predictions, 5);
  EXPECT_GT(summary.temperature_unavailable, 0);
  for (const auto& r : telemetry::read_raw_csv(summary.raw_csv)) {
    EXPECT_FALSE(r.cpu_temp_c.has_value());
    EXPECT_TRUE(r.inference_ms.has_value());
  }
}

TEST(EngineTest, StartupErrorsAreFatal) {
  const auto dir = scratch();
  auto broken = fast_config(dir, 20);
  EXPECT_EQ(error_code([&] { broken.manifest = manifest("broken.toml"); }), Errc::manifest_invalid);

  auto missing = fast_config(dir, 20);
  missing.manifest.primary_model_path = dir / "absent.onnx";
  EXPECT_EQ(error_code([&] { Engine(missing).start(); }), Errc::file_missing);

  auto device = fast_config(dir, 20, 1.0);
  device.source.kind = audio::SourceKind::live_device;
  device.source.device_id = (dir / "no_device").string();
  EXPECT_EQ(error_code([&] { Engine(device).start(); }), Errc::device_unavailable);

  auto wrong_len = fast_config(dir, 20);
  wrong_len.manifest.input_samples = 160000;
  EXPECT_EQ(error_code([&] { Engine(wrong_len).start(); }), Errc::window_mismatch);

  auto too_many = fast_config(dir, 20);
  too_many.top_k = 600;
  EXPECT_EQ(error_code([&] { Engine(too_many).start(); }), Errc::config);

  EXPECT_EQ(error_code([&] { Engine(fast_config(dir, 20)).wait(); }), Errc::config);
}

TEST(EngineTest, BackendFailuresSkipWindows) {
  const auto dir = scratch();
  auto cfg = fast_config(dir, 30);
  cfg.manifest = manifest("faulty.toml");
  Collected got;
  const auto summary = Engine(cfg, got.hooks()).run();
  EXPECT_EQ(summary.windows_emitted, 5);
  EXPECT_EQ(summary.counters.backend_failures, 5);
  EXPECT_EQ(got.size(), 0u);
  EXPECT_EQ(summary.exit_reason, "end_of_stream");

  cfg.source.signal = audio::SyntheticSignal::silence;
  cfg.run_id = "silent";
  const auto silent = Engine(cfg, got.hooks()).run();
  EXPECT_EQ(silent.counters.backend_failures, 0);
  EXPECT_EQ(got.size(), 5u);
}
