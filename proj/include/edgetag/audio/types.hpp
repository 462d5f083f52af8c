#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <vector>

namespace edgetag::audio {

/// Timestamped block of mono samples in [-1, 1]. `start_time_ns` is on the
/// stream's monotonic timeline (sample-accurate for file/synthetic sources).
struct PcmChunk {
  std::vector<float> samples;
  int sample_rate_hz = 0;
  std::int64_t start_time_ns = 0;
  // Set by the producer when samples were lost immediately before this chunk.
  bool discontinuity = false;

  std::int64_t duration_ns() const {
    return static_cast<std::int64_t>(samples.size()) * 1'000'000'000 / sample_rate_hz;
  }
};

// Throws Error(Errc::config) when the chunk violates its invariants.
void validate(const PcmChunk& chunk);

/// Analysis window geometry. Defaults: 10 s windows every 5 s at 32 kHz.
struct WindowSpec {
  double window_s = 10.0;
  double hop_s = 5.0;
  int target_rate_hz = 32000;

  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  std::size_t overlap_samples() const { return window_samples() - hop_samples(); }
  // 0 < hop <= window and both land on whole samples at the target rate.
  void validate() const;
};

/// Fixed-length window handed to inference; samples are shared between the
/// predict and write paths without copying.
struct AnalysisWindow {
  std::shared_ptr<const std::vector<float>> samples;
  int sample_rate_hz = 0;
  std::int64_t index = 0;
  std::int64_t start_time_ns = 0;
  std::chrono::steady_clock::time_point ready_at{};

  std::size_t size() const { return samples ? samples->size() : 0; }
};

AnalysisWindow make_window(std::vector<float> samples, int sample_rate_hz, std::int64_t index = 0,
                           std::int64_t start_time_ns = 0);

}  // namespace edgetag::audio
