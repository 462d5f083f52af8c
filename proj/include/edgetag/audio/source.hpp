#pragma once

#include "edgetag/audio/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace edgetag::audio {

enum class SourceKind { live_device, file_playback, synthetic };
enum class SyntheticSignal { sine, silence, noise };

std::string to_string(SourceKind kind);
SourceKind parse_source_kind(const std::string& text);
std::string to_string(SyntheticSignal signal);
SyntheticSignal parse_synthetic_signal(const std::string& text);

struct SourceConfig {
  SourceKind kind = SourceKind::synthetic;
  int device_rate_hz = 44100;
  // File path for file-playback; PCM device/FIFO path (or "-" for stdin) for live-device.
  std::string device_id;
  SyntheticSignal signal = SyntheticSignal::sine;
  double frequency_hz = 440.0;
  double amplitude = 0.5;
  std::uint64_t seed = 42;
  // file-playback: restart from the beginning at end of file.
  bool loop = false;
};

/// Pull-based audio producer. Chunks carry sample-accurate timestamps that
/// start at zero; the capture loop maps them onto the run clock.
class AudioSource {
 public:
  virtual ~AudioSource() = default;

  virtual int sample_rate_hz() const = 0;
  // Reads up to `frames` samples; nullopt at end of stream.
  virtual std::optional<PcmChunk> read(std::size_t frames) = 0;
  // True when reads block at real-time pace (a device); false when the
  // caller has to pace the stream itself.
  virtual bool self_paced() const { return false; }
  virtual std::string describe() const = 0;
};

// Throws Error(Errc::device_unavailable) when the source cannot be opened.
std::unique_ptr<AudioSource> open_source(const SourceConfig& config);

}  // namespace edgetag::audio
