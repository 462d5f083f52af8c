#include <gtest/gtest.h>

#include "edgetag/audio/capture.hpp"
#include "edgetag/audio/resampler.hpp"
#include "edgetag/audio/source.hpp"
#include "edgetag/audio/wav.hpp"
#include "edgetag/audio/windower.hpp"
#include "edgetag/error.hpp"
#include "golden.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

using namespace edgetag;
using namespace edgetag::audio;

namespace {

std::vector<PcmChunk> capture_all(AudioSource& source, int chunk_ms,
                                  std::optional<std::int64_t> max_ns = std::nullopt) {
  CaptureOptions options;
  options.chunk = std::chrono::milliseconds(chunk_ms);
  options.paced = false;
  options.max_stream_ns = max_ns;
  std::vector<PcmChunk> chunks;
  std::stop_source stop;
  capture_stream(source, options, stop.get_token(), [&](PcmChunk&& c) { chunks.push_back(std::move(c)); });
  return chunks;
}

// Contiguous target-rate chunks whose samples are 0, 1, 2, ... scaled into
// [-1, 1) so every sample identifies its stream position.
std::vector<PcmChunk> ramp_stream(std::int64_t total, int rate, std::size_t chunk) {
  std::vector<PcmChunk> chunks;
  std::int64_t pos = 0;
  while (pos < total) {
    PcmChunk c;
    c.sample_rate_hz = rate;
    c.start_time_ns = pos * 1'000'000'000 / rate;
    const auto n = static_cast<std::int64_t>(std::min<std::int64_t>(static_cast<std::int64_t>(chunk), total - pos));
    for (std::int64_t i = 0; i < n; ++i)
      c.samples.push_back(static_cast<float>((pos + i) % 16777216) / 16777216.0f);
    pos += n;
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<float> tone(double hz, std::size_t n, int rate, double amplitude = 0.9) {
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- capture

TEST(Capture, SyntheticSineChunksAre4410SamplesAt44k1) {
  SourceConfig cfg;
  cfg.signal = SyntheticSignal::sine;
  cfg.frequency_hz = 440.0;
  cfg.device_rate_hz = 44100;
  auto source = open_source(cfg);
  const auto chunks = capture_all(*source, 100, 2'000'000'000);
  ASSERT_EQ(chunks.size(), 20u);
  std::int64_t expected_start = 0;
  for (const auto& c : chunks) {
    EXPECT_EQ(c.samples.size(), 4410u);
    EXPECT_EQ(c.sample_rate_hz, 44100);
    EXPECT_EQ(c.start_time_ns, expected_start);
    expected_start += c.duration_ns();
    validate(c);
  }
}

TEST(Capture, TimestampsStrictlyIncreaseAndCoverageIsGapFree) {
  SourceConfig cfg;
  cfg.signal = SyntheticSignal::noise;
  cfg.device_rate_hz = 48000;
  auto source = open_source(cfg);
  const auto chunks = capture_all(*source, 37, 1'500'000'000);
  std::int64_t samples = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (i > 0) EXPECT_GT(chunks[i].start_time_ns, chunks[i - 1].start_time_ns);
    EXPECT_EQ(chunks[i].start_time_ns, samples * 1'000'000'000 / 48000);
    samples += static_cast<std::int64_t>(chunks[i].samples.size());
  }
  EXPECT_EQ(samples, 72000);
}

TEST(Capture, FilePlaybackConservesSamples) {
  const auto path = testkit::fixture("audio/tone_1k_44k1_10s.wav");
  const auto wav = read_wav(path);
  SourceConfig cfg;
  cfg.kind = SourceKind::file_playback;
  cfg.device_id = path.string();
  auto source = open_source(cfg);
  EXPECT_EQ(source->sample_rate_hz(), 44100);
  const auto chunks = capture_all(*source, 100);
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.samples.size();
  EXPECT_EQ(total, wav.samples.size());
  EXPECT_EQ(total, 441000u);
}

TEST(Capture, SilenceGeneratorEmitsZeros) {
  SourceConfig cfg;
  cfg.signal = SyntheticSignal::silence;
  auto source = open_source(cfg);
  for (const auto& c : capture_all(*source, 50, 1'000'000'000))
    for (float v : c.samples) ASSERT_EQ(v, 0.0f);
}

TEST(Capture, SyntheticSourcesAreDeterministicPerSeed) {
  SourceConfig cfg;
  cfg.signal = SyntheticSignal::noise;
  cfg.seed = 9;
  auto a = open_source(cfg);
  auto b = open_source(cfg);
  const auto ca = capture_all(*a, 100, 500'000'000);
  const auto cb = capture_all(*b, 100, 500'000'000);
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_EQ(ca[i].samples, cb[i].samples);
}

TEST(Capture, PacedCaptureFollowsTheScaledClock) {
  SourceConfig cfg;
  auto source = open_source(cfg);
  CaptureOptions options;
  options.paced = true;
  options.time_scale = 0.1;  // 2 s of audio in ~0.2 s
  options.max_stream_ns = 2'000'000'000;
  std::stop_source stop;
  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = capture_stream(*source, options, stop.get_token(), [](PcmChunk&&) {});
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(stats.samples, 88200);
  EXPECT_GE(elapsed, 0.19);
  EXPECT_LT(elapsed, 1.0);
}

TEST(Capture, MissingDevicesAreUnavailable) {
  SourceConfig file;
  file.kind = SourceKind::file_playback;
  file.device_id = "/nonexistent/clip.wav";
  SourceConfig live;
  live.kind = SourceKind::live_device;
  live.device_id = "/nonexistent/pcm";
  for (const auto& cfg : {file, live}) {
    try {
      open_source(cfg);
      FAIL();
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), Errc::device_unavailable);
    }
  }
}

TEST(Capture, LiveDeviceReadsRawS16Pcm) {
  const auto dir = testkit::make_temp_dir("pcm");
  const auto path = dir / "capture.raw";
  {
    std::ofstream out(path, std::ios::binary);
    for (int i = 0; i < 8820; ++i) {
      const auto v = static_cast<std::int16_t>(i % 2 ? -16384 : 16384);
      out.write(reinterpret_cast<const char*>(&v), 2);
    }
  }
  SourceConfig cfg;
  cfg.kind = SourceKind::live_device;
  cfg.device_id = path.string();
  auto source = open_source(cfg);
  EXPECT_TRUE(source->self_paced());
  const auto chunks = capture_all(*source, 100);
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[0].samples[0], 0.5f);
  EXPECT_EQ(chunks[0].samples[1], -0.5f);
  EXPECT_EQ(chunks[1].start_time_ns, 100'000'000);
}

// ---------------------------------------------------------------- WAV

TEST(Wav, FloatRoundTripIsExact) {
  const auto dir = testkit::make_temp_dir("wav");
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> samples(12345);
  for (auto& s : samples) s = dist(rng);
  write_wav_float(dir / "a.wav", samples, 32000);
  const auto back = read_wav(dir / "a.wav");
  EXPECT_TRUE(back.is_float);
  EXPECT_EQ(back.sample_rate_hz, 32000);
  EXPECT_EQ(back.channels, 1);
  ASSERT_EQ(back.samples.size(), samples.size());
  EXPECT_EQ(std::memcmp(back.samples.data(), samples.data(), samples.size() * sizeof(float)), 0);
}

TEST(Wav, StereoPcm16KeepsFirstChannel) {
  const auto dir = testkit::make_temp_dir("wav");
  const auto path = dir / "stereo.wav";
  {
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    u32(36 + 16);
    out.write("WAVEfmt ", 8);
    u32(16);
    u16(1);
    u16(2);
    u32(8000);
    u32(8000 * 4);
    u16(4);
    u16(16);
    out.write("data", 4);
    u32(16);
    for (int i = 0; i < 4; ++i) {
      u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(i * 1000)));
      u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(-7)));
    }
  }
  const auto wav = read_wav(path);
  EXPECT_EQ(wav.channels, 2);
  ASSERT_EQ(wav.samples.size(), 4u);
  EXPECT_EQ(wav.samples[3], 3000.0f / 32768.0f);
}

// ---------------------------------------------------------------- resampler

TEST(Resampler, TenSecondsAt44k1BecomeThe320kModelInput) {
  const auto out = resample(std::vector<float>(441000, 0.25f), 44100, 32000);
  EXPECT_EQ(out.size(), 320000u);
  // DC passes at unity away from the edges
  EXPECT_NEAR(out[160000], 0.25f, 1e-4f);
}

TEST(Resampler, EqualRatesAreBitIdentical) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> in(4097);
  for (auto& v : in) v = dist(rng);
  const auto out = resample(in, 32000, 32000);
  ASSERT_EQ(out.size(), in.size());
  EXPECT_EQ(std::memcmp(out.data(), in.data(), in.size() * sizeof(float)), 0);
}

TEST(Resampler, OneKilohertzToneKeepsItsFrequency) {
  const auto out = resample(tone(1000.0, 441000, 44100), 44100, 32000);
  const double peak = testkit::fft_peak_hz(out, 32000);
  EXPECT_NEAR(peak, 1000.0, 2.0);
}

TEST(Resampler, StopBandIsAttenuatedBeyond64dB) {
  // 17 kHz lies above the 16 kHz output Nyquist; its alias would land at 15 kHz
  const auto out = resample(tone(17000.0, 88200, 44100, 1.0), 44100, 32000);
  EXPECT_LT(testkit::tone_level_db(out, 32000, 15000.0), -64.0);
  // in-band tone passes near unity
  const auto pass = resample(tone(5000.0, 88200, 44100, 1.0), 44100, 32000);
  EXPECT_NEAR(testkit::tone_level_db(pass, 32000, 5000.0), 0.0, 0.1);
}

TEST(Resampler, LengthAndIdentityHoldForRandomCases) {
  std::mt19937 rng(1234);
  const int common[] = {8000, 11025, 16000, 22050, 32000, 44100, 48000, 96000};
  std::uniform_int_distribution<int> pick(0, 7);
  std::uniform_int_distribution<int> any_rate(4000, 96000);
  std::uniform_int_distribution<int> length(1, 600);
  std::uniform_real_distribution<float> sample(-1.0f, 1.0f);
  for (int trial = 0; trial < 1000; ++trial) {
    const int src = trial % 3 == 0 ? any_rate(rng) : common[pick(rng)];
    const int dst = trial % 5 == 0 ? src : (trial % 3 == 1 ? any_rate(rng) : common[pick(rng)]);
    std::vector<float> in(static_cast<std::size_t>(length(rng)));
    for (auto& v : in) v = sample(rng);
    const auto out = resample(in, src, dst);
    const auto expected = static_cast<std::size_t>(std::llround(static_cast<double>(in.size()) * dst / src));
    ASSERT_EQ(out.size(), expected) << src << "->" << dst << " n=" << in.size();
    if (src == dst) ASSERT_EQ(out, in);
    for (float v : out) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Resampler, StreamingMatchesOneShotForAnyChunking) {
  std::mt19937 rng(77);
  std::uniform_int_distribution<std::size_t> piece(1, 3000);
  for (auto [src, dst] : {std::pair{44100, 32000}, std::pair{48000, 32000}, std::pair{16000, 32000},
                          std::pair{32000, 32000}}) {
    const auto in = tone(1234.5, 20000, src);
    const auto expected = resample(in, src, dst);
    StreamingResampler stream(src, dst);
    std::vector<float> got;
    std::size_t pos = 0;
    while (pos < in.size()) {
      const std::size_t n = std::min(piece(rng), in.size() - pos);
      stream.process(std::span<const float>(in).subspan(pos, n), got);
      pos += n;
    }
    stream.flush(got);
    ASSERT_EQ(got.size(), expected.size());
    EXPECT_EQ(std::memcmp(got.data(), expected.data(), got.size() * sizeof(float)), 0) << src << "->" << dst;
  }
}

TEST(Resampler, RejectsBadArguments) {
  EXPECT_THROW(resample(std::vector<float>(10, 0.0f), 0, 32000), Error);
  EXPECT_THROW(resample(std::vector<float>(10, 0.0f), 44100, -1), Error);
  EXPECT_THROW(resample(std::vector<float>{}, 44100, 32000), Error);
}

// ---------------------------------------------------------------- windowing

TEST(Windowing, TwentySecondsGiveThreeHalfOverlappingWindows) {
  const WindowSpec spec;
  const auto chunks = ramp_stream(20 * 32000, 32000, 3200);
  const auto windows = window_stream(chunks, spec);
  ASSERT_EQ(windows.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(windows[k].index, static_cast<std::int64_t>(k));
    EXPECT_EQ(windows[k].start_time_ns, static_cast<std::int64_t>(k) * 5'000'000'000);
    ASSERT_EQ(windows[k].size(), 320000u);
    // window k starts at stream sample k * hop
    EXPECT_EQ((*windows[k].samples)[0], static_cast<float>(k * 160000) / 16777216.0f);
  }
  EXPECT_EQ(std::memcmp(windows[0].samples->data() + 160000, windows[1].samples->data(), 160000 * sizeof(float)),
            0);
}

TEST(Windowing, LessThanOneWindowEmitsNothing) {
  const auto windows = window_stream(ramp_stream(316800, 32000, 3200), WindowSpec{});
  EXPECT_TRUE(windows.empty());
}

TEST(Windowing, PeriodicStreamGivesIdenticalConsecutiveWindows) {
  // 15 s stream built from one 5 s block repeated: windows [0,10) and [5,15) coincide
  const auto block = tone(313.0, 160000, 32000, 0.7);
  std::vector<PcmChunk> chunks;
  for (int rep = 0; rep < 3; ++rep) {
    PcmChunk c;
    c.sample_rate_hz = 32000;
    c.start_time_ns = rep * 5'000'000'000LL;
    c.samples = block;
    chunks.push_back(c);
  }
  const auto windows = window_stream(chunks, WindowSpec{});
  ASSERT_EQ(windows.size(), 2u);
  EXPECT_EQ(*windows[0].samples, *windows[1].samples);
}

TEST(Windowing, CountAndOverlapPropertiesHoldForRandomGeometry) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> window_tenths(5, 40);
  std::uniform_int_distribution<int> duration_tenths(0, 200);
  std::uniform_int_distribution<std::size_t> chunk(50, 4000);
  const int rate = 1000;
  for (int trial = 0; trial < 50; ++trial) {
    WindowSpec spec;
    spec.target_rate_hz = rate;
    spec.window_s = window_tenths(rng) / 10.0;
    spec.hop_s = std::uniform_int_distribution<int>(1, static_cast<int>(spec.window_s * 10))(rng) / 10.0;
    const std::int64_t samples = duration_tenths(rng) * rate / 10;
    const auto windows = window_stream(ramp_stream(samples, rate, chunk(rng)), spec);

    const double d = static_cast<double>(samples) / rate;
    const auto expected = d >= spec.window_s
                              ? static_cast<std::size_t>(std::floor((d - spec.window_s) / spec.hop_s + 1e-9)) + 1
                              : 0u;
    ASSERT_EQ(windows.size(), expected) << "D=" << d << " W=" << spec.window_s << " H=" << spec.hop_s;
    ASSERT_EQ(static_cast<std::int64_t>(windows.size()), expected_window_count(samples, spec));
    const std::size_t overlap = spec.overlap_samples();
    for (std::size_t k = 0; k + 1 < windows.size(); ++k) {
      ASSERT_EQ(windows[k].size(), spec.window_samples());
      ASSERT_EQ(std::memcmp(windows[k].samples->data() + spec.hop_samples(), windows[k + 1].samples->data(),
                            overlap * sizeof(float)),
                0);
    }
  }
}

TEST(Windowing, GapRestartsTheRegionAndKeepsIndicesIncreasing) {
  WindowSpec spec;
  spec.target_rate_hz = 1000;
  spec.window_s = 2.0;
  spec.hop_s = 1.0;
  WindowAssembler assembler(spec);
  std::vector<AnalysisWindow> out;
  auto chunks = ramp_stream(3500, 1000, 500);
  for (const auto& c : chunks) assembler.push(c, out);
  EXPECT_EQ(out.size(), 2u);  // [0,2) [1,3)

  // 1.5 s later the stream resumes; nothing before the gap may be reused
  auto resumed = ramp_stream(2500, 1000, 500);
  for (auto& c : resumed) c.start_time_ns += 5'000'000'000;
  resumed.front().discontinuity = true;
  for (const auto& c : resumed) assembler.push(c, out);
  EXPECT_EQ(assembler.stream_gaps(), 1);
  ASSERT_EQ(out.size(), 2u + 1u);
  EXPECT_EQ(out[2].index, 2);
  EXPECT_EQ(out[2].start_time_ns, 5'000'000'000);
  EXPECT_EQ((*out[2].samples)[0], 0.0f);

  // a timestamp jump without the flag is a gap too
  auto jumped = ramp_stream(2000, 1000, 1000);
  for (auto& c : jumped) c.start_time_ns += 60'000'000'000;
  for (const auto& c : jumped) assembler.push(c, out);
  EXPECT_EQ(assembler.stream_gaps(), 2);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[3].index, 3);
}

TEST(Windowing, RingBufferHoldsTwoWindows) {
  WindowAssembler assembler(WindowSpec{});
  EXPECT_EQ(assembler.capacity(), 640000u);
  std::vector<AnalysisWindow> out;
  for (const auto& c : ramp_stream(32000 * 23, 32000, 32000 * 7)) {
    assembler.push(c, out);
    EXPECT_LT(assembler.buffered(), 320000u);
  }
  EXPECT_EQ(out.size(), 3u);
}

TEST(WindowSpecTest, RejectsInvalidGeometry) {
  WindowSpec spec;
  EXPECT_EQ(spec.window_samples(), 320000u);
  EXPECT_EQ(spec.hop_samples(), 160000u);
  spec.hop_s = 11.0;
  EXPECT_THROW(spec.validate(), Error);
  spec.hop_s = 0.0;
  EXPECT_THROW(spec.validate(), Error);
  spec.hop_s = 5.0;
  spec.window_s = 10.00001;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(PcmChunkTest, ValidationRejectsOutOfRangeSamples) {
  PcmChunk c;
  c.sample_rate_hz = 16000;
  EXPECT_THROW(validate(c), Error);
  c.samples = {0.0f, 1.5f};
  EXPECT_THROW(validate(c), Error);
  c.samples = {0.0f, std::nanf("")};
  EXPECT_THROW(validate(c), Error);
  c.samples = {0.0f, -1.0f, 1.0f};
  EXPECT_NO_THROW(validate(c));
}
