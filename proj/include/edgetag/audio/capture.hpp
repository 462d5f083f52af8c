#pragma once

#include "edgetag/audio/source.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stop_token>

namespace edgetag::audio {

struct CaptureOptions {
  std::chrono::milliseconds chunk{100};
  // Sleep so chunks are delivered no earlier than they would be recorded.
  bool paced = true;
  // Wall seconds per stream second when pacing (< 1 compresses synthetic/file time).
  double time_scale = 1.0;
  // Stop after this much stream time; the last chunk is truncated to fit.
  std::optional<std::int64_t> max_stream_ns;
};

struct CaptureStats {
  std::int64_t chunks = 0;
  std::int64_t samples = 0;
  bool end_of_stream = false;
};

/// Reads `source` chunk by chunk and hands each chunk to `sink` on the
/// calling thread until stopped, the source ends, or max_stream_ns passes.
/// Timestamps are strictly increasing and sample-contiguous.
CaptureStats capture_stream(AudioSource& source, const CaptureOptions& options, std::stop_token stop,
                            const std::function<void(PcmChunk&&)>& sink);

std::size_t chunk_frames(int sample_rate_hz, std::chrono::milliseconds chunk);

}  // namespace edgetag::audio
