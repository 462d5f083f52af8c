#include "edgetag/audio/windower.hpp"

#include "edgetag/error.hpp"

#include <cstdlib>

namespace edgetag::audio {

WindowAssembler::WindowAssembler(WindowSpec spec)
    : spec_(spec),
      window_((spec.validate(), spec.window_samples())),
      hop_(spec.hop_samples()),
      ring_(2 * window_) {}

void WindowAssembler::restart_region(std::int64_t start_ns) {
  ring_.clear();
  region_start_ns_ = start_ns;
  region_samples_ = 0;
  next_start_ = 0;
  expected_next_ns_ = start_ns;
}

bool WindowAssembler::is_contiguous(const PcmChunk& chunk) const {
  if (chunk.discontinuity) return false;
  // Half a sample of timestamp slack absorbs integer rounding.
  const std::int64_t tolerance = 500'000'000 / spec_.target_rate_hz + 1;
  return std::llabs(chunk.start_time_ns - expected_next_ns_) <= tolerance;
}

std::size_t WindowAssembler::push(const PcmChunk& chunk, std::vector<AnalysisWindow>& out) {
  if (chunk.sample_rate_hz != spec_.target_rate_hz)
    throw Error(Errc::config, "window assembler expects chunks at the target rate");
  if (chunk.samples.empty()) return 0;

  if (!started_) {
    started_ = true;
    restart_region(chunk.start_time_ns);
  } else if (!is_contiguous(chunk)) {
    ++gaps_;
    restart_region(chunk.start_time_ns);
  }

  const std::size_t before = out.size();
  std::span<const float> rest(chunk.samples);
  while (!rest.empty()) {
    const std::size_t take = std::min(rest.size(), ring_.free_space());
    ring_.push(rest.first(take));
    rest = rest.subspan(take);
    region_samples_ += static_cast<std::int64_t>(take);

    while (ring_.size() >= window_) {
      std::vector<float> samples(window_);
      ring_.peek(window_, samples.data());
      const std::int64_t start_ns =
          region_start_ns_ + next_start_ * 1'000'000'000 / spec_.target_rate_hz;
      out.push_back(make_window(std::move(samples), spec_.target_rate_hz, next_index_++, start_ns));
      ring_.discard(hop_);
      next_start_ += static_cast<std::int64_t>(hop_);
    }
  }
  expected_next_ns_ = region_start_ns_ + region_samples_ * 1'000'000'000 / spec_.target_rate_hz;
  return out.size() - before;
}

std::vector<AnalysisWindow> window_stream(std::span<const PcmChunk> chunks, const WindowSpec& spec) {
  WindowAssembler assembler(spec);
  std::vector<AnalysisWindow> out;
  for (const auto& chunk : chunks) assembler.push(chunk, out);
  return out;
}

std::int64_t expected_window_count(std::int64_t stream_samples, const WindowSpec& spec) {
  const auto w = static_cast<std::int64_t>(spec.window_samples());
  const auto h = static_cast<std::int64_t>(spec.hop_samples());
  if (stream_samples < w) return 0;
  return (stream_samples - w) / h + 1;
}

}  // namespace edgetag::audio
