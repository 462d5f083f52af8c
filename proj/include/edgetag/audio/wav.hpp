#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace edgetag::audio {

struct WavData {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  std::vector<float> samples;  // first channel, normalized to [-1, 1]
};

// Reads PCM WAV: 16-bit integer or 32-bit float, mono or stereo (first
// channel kept). Throws Error(file_missing | io).
WavData read_wav(const std::filesystem::path& path);

// Writes mono 32-bit float WAV (WAVE_FORMAT_IEEE_FLOAT); samples round-trip exactly.
void write_wav_float(const std::filesystem::path& path, std::span<const float> samples, int sample_rate_hz);

// Writes mono 16-bit PCM WAV (clipped, rounded).
void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> samples, int sample_rate_hz);

}  // namespace edgetag::audio
