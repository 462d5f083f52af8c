#include "edgetag/audio/capture.hpp"

#include "edgetag/error.hpp"

#include <thread>

namespace edgetag::audio {

std::size_t chunk_frames(int sample_rate_hz, std::chrono::milliseconds chunk) {
  if (chunk.count() <= 0) throw Error(Errc::config, "chunk_ms must be positive");
  const auto frames = static_cast<std::int64_t>(sample_rate_hz) * chunk.count() / 1000;
  if (frames <= 0) throw Error(Errc::config, "chunk shorter than one sample");
  return static_cast<std::size_t>(frames);
}

CaptureStats capture_stream(AudioSource& source, const CaptureOptions& options, std::stop_token stop,
                            const std::function<void(PcmChunk&&)>& sink) {
  if (!(options.time_scale > 0.0)) throw Error(Errc::config, "time_scale must be positive");
  const int rate = source.sample_rate_hz();
  const std::size_t frames = chunk_frames(rate, options.chunk);
  const bool pace = options.paced && !source.self_paced();
  const auto started = std::chrono::steady_clock::now();

  CaptureStats stats;
  while (!stop.stop_requested()) {
    std::size_t want = frames;
    if (options.max_stream_ns) {
      const std::int64_t limit = *options.max_stream_ns * rate / 1'000'000'000;
      if (stats.samples >= limit) break;
      want = static_cast<std::size_t>(std::min<std::int64_t>(static_cast<std::int64_t>(want), limit - stats.samples));
    }
    auto chunk = source.read(want);
    if (!chunk || chunk->samples.empty()) {
      stats.end_of_stream = true;
      break;
    }
    stats.samples += static_cast<std::int64_t>(chunk->samples.size());
    ++stats.chunks;
    if (pace) {
      const double end_s = static_cast<double>(stats.samples) / rate * options.time_scale;
      const auto deadline = started + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          std::chrono::duration<double>(end_s));
      while (!stop.stop_requested() && std::chrono::steady_clock::now() < deadline) {
        const auto remaining = deadline - std::chrono::steady_clock::now();
        std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
            remaining, std::chrono::milliseconds(20)));
      }
      if (stop.stop_requested()) break;
    }
    sink(std::move(*chunk));
  }
  return stats;
}

}  // namespace edgetag::audio
