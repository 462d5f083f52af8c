#include "edgetag/audio/source.hpp"

#include "edgetag/audio/wav.hpp"
#include "edgetag/error.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <fcntl.h>
#include <unistd.h>

namespace edgetag::audio {
namespace {

std::int64_t sample_time_ns(std::int64_t index, int rate) {
  // exact for indices up to ~9e9 at 1 MHz
  return index / rate * 1'000'000'000 + index % rate * 1'000'000'000 / rate;
}

class SyntheticSource final : public AudioSource {
 public:
  explicit SyntheticSource(const SourceConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    if (cfg.device_rate_hz <= 0) throw Error(Errc::device_unavailable, "synthetic rate must be positive");
    if (!(cfg.amplitude >= 0.0 && cfg.amplitude <= 1.0))
      throw Error(Errc::config, "synthetic amplitude must lie in [0, 1]");
  }

  int sample_rate_hz() const override { return cfg_.device_rate_hz; }

  std::optional<PcmChunk> read(std::size_t frames) override {
    PcmChunk chunk;
    chunk.sample_rate_hz = cfg_.device_rate_hz;
    chunk.start_time_ns = sample_time_ns(position_, cfg_.device_rate_hz);
    chunk.samples.resize(frames);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(cfg_.amplitude) / 3.0f);
    for (std::size_t i = 0; i < frames; ++i) {
      const auto n = position_ + static_cast<std::int64_t>(i);
      float v = 0.0f;
      switch (cfg_.signal) {
        case SyntheticSignal::sine:
          v = static_cast<float>(cfg_.amplitude * std::sin(2.0 * std::numbers::pi * cycles(n)));
          break;
        case SyntheticSignal::silence:
          break;
        case SyntheticSignal::noise:
          v = std::clamp(noise(rng_), -1.0f, 1.0f);
          break;
      }
      chunk.samples[i] = v;
    }
    position_ += static_cast<std::int64_t>(frames);
    return chunk;
  }

  // Fractional cycle count at sample n, split so long runs keep full precision.
  double cycles(std::int64_t n) const {
    const int rate = cfg_.device_rate_hz;
    const double whole = std::fmod(static_cast<double>(n / rate) * cfg_.frequency_hz, 1.0);
    return whole + static_cast<double>(n % rate) * cfg_.frequency_hz / rate;
  }

  std::string describe() const override {
    return "synthetic " + to_string(cfg_.signal) + " @" + std::to_string(cfg_.device_rate_hz) + " Hz";
  }

 private:
  SourceConfig cfg_;
  std::mt19937_64 rng_;
  std::int64_t position_ = 0;
};

class FileSource final : public AudioSource {
 public:
  explicit FileSource(const SourceConfig& cfg) : path_(cfg.device_id), loop_(cfg.loop) {
    try {
      wav_ = read_wav(cfg.device_id);
    } catch (const Error& err) {
      throw Error(Errc::device_unavailable, err.what());
    }
    if (wav_.samples.empty()) throw Error(Errc::device_unavailable, cfg.device_id + ": no audio frames");
    for (float& s : wav_.samples) s = std::isfinite(s) ? std::clamp(s, -1.0f, 1.0f) : 0.0f;
  }

  int sample_rate_hz() const override { return wav_.sample_rate_hz; }

  std::optional<PcmChunk> read(std::size_t frames) override {
    const std::size_t total = wav_.samples.size();
    if (cursor_ >= total) {
      if (!loop_) return std::nullopt;
      cursor_ = 0;
    }
    const std::size_t n = std::min(frames, total - cursor_);
    PcmChunk chunk;
    chunk.sample_rate_hz = wav_.sample_rate_hz;
    chunk.start_time_ns = sample_time_ns(emitted_, wav_.sample_rate_hz);
    chunk.samples.assign(wav_.samples.begin() + static_cast<std::ptrdiff_t>(cursor_),
                         wav_.samples.begin() + static_cast<std::ptrdiff_t>(cursor_ + n));
    cursor_ += n;
    emitted_ += static_cast<std::int64_t>(n);
    return chunk;
  }

  std::string describe() const override { return "file " + path_; }

 private:
  std::string path_;
  bool loop_;
  WavData wav_;
  std::size_t cursor_ = 0;
  std::int64_t emitted_ = 0;
};

// Raw little-endian s16 mono PCM from a capture device node, FIFO, or stdin.
class RawPcmDeviceSource final : public AudioSource {
 public:
  explicit RawPcmDeviceSource(const SourceConfig& cfg) : cfg_(cfg) {
    if (cfg.device_id.empty())
      throw Error(Errc::device_unavailable, "live-device source needs a device path (or '-')");
    if (cfg.device_id == "-") {
      fd_ = STDIN_FILENO;
    } else {
      fd_ = ::open(cfg.device_id.c_str(), O_RDONLY);
      if (fd_ < 0)
        throw Error(Errc::device_unavailable, cfg.device_id + ": " + std::strerror(errno));
      owns_fd_ = true;
    }
  }
  ~RawPcmDeviceSource() override {
    if (owns_fd_) ::close(fd_);
  }
  RawPcmDeviceSource(const RawPcmDeviceSource&) = delete;
  RawPcmDeviceSource& operator=(const RawPcmDeviceSource&) = delete;

  int sample_rate_hz() const override { return cfg_.device_rate_hz; }
  bool self_paced() const override { return true; }

  std::optional<PcmChunk> read(std::size_t frames) override {
    std::vector<std::int16_t> raw(frames);
    std::size_t got = 0;
    auto* bytes = reinterpret_cast<char*>(raw.data());
    const std::size_t want = frames * sizeof(std::int16_t);
    while (got < want) {
      const ssize_t n = ::read(fd_, bytes + got, want - got);
      if (n == 0) break;
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::device_unavailable, cfg_.device_id + ": " + std::strerror(errno));
      }
      got += static_cast<std::size_t>(n);
    }
    const std::size_t samples = got / sizeof(std::int16_t);
    if (samples == 0) return std::nullopt;
    PcmChunk chunk;
    chunk.sample_rate_hz = cfg_.device_rate_hz;
    chunk.start_time_ns = sample_time_ns(position_, cfg_.device_rate_hz);
    chunk.samples.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) chunk.samples[i] = static_cast<float>(raw[i]) / 32768.0f;
    position_ += static_cast<std::int64_t>(samples);
    return chunk;
  }

  std::string describe() const override { return "raw s16le device " + cfg_.device_id; }

 private:
  SourceConfig cfg_;
  int fd_ = -1;
  bool owns_fd_ = false;
  std::int64_t position_ = 0;
};

}  // namespace

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::live_device: return "live-device";
    case SourceKind::file_playback: return "file-playback";
    case SourceKind::synthetic: return "synthetic";
  }
  return "synthetic";
}

SourceKind parse_source_kind(const std::string& text) {
  if (text == "live-device" || text == "live") return SourceKind::live_device;
  if (text == "file-playback" || text == "file") return SourceKind::file_playback;
  if (text == "synthetic" || text == "synthetic-generator") return SourceKind::synthetic;
  throw Error(Errc::config, "unknown source kind '" + text + "'");
}

std::string to_string(SyntheticSignal signal) {
  switch (signal) {
    case SyntheticSignal::sine: return "sine";
    case SyntheticSignal::silence: return "silence";
    case SyntheticSignal::noise: return "noise";
  }
  return "sine";
}

SyntheticSignal parse_synthetic_signal(const std::string& text) {
  if (text == "sine") return SyntheticSignal::sine;
  if (text == "silence") return SyntheticSignal::silence;
  if (text == "noise") return SyntheticSignal::noise;
  throw Error(Errc::config, "unknown synthetic signal '" + text + "'");
}

std::unique_ptr<AudioSource> open_source(const SourceConfig& config) {
  switch (config.kind) {
    case SourceKind::synthetic: return std::make_unique<SyntheticSource>(config);
    case SourceKind::file_playback: return std::make_unique<FileSource>(config);
    case SourceKind::live_device: return std::make_unique<RawPcmDeviceSource>(config);
  }
  throw Error(Errc::device_unavailable, "unsupported source kind");
}

}  // namespace edgetag::audio
