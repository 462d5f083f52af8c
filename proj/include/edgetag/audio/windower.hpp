#pragma once

#include "edgetag/audio/ring_buffer.hpp"
#include "edgetag/audio/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace edgetag::audio {

/// Turns a contiguous target-rate chunk stream into overlapping analysis
/// windows. Window k of a contiguous region covers [k*hop, k*hop + window).
/// A discontinuity (flagged or detected from timestamps) restarts the region;
/// window indices keep increasing across regions.
class WindowAssembler {
 public:
  explicit WindowAssembler(WindowSpec spec);

  // Appends a chunk and returns the number of windows appended to `out`.
  std::size_t push(const PcmChunk& chunk, std::vector<AnalysisWindow>& out);

  const WindowSpec& spec() const { return spec_; }
  std::int64_t stream_gaps() const { return gaps_; }
  std::int64_t windows_emitted() const { return next_index_; }
  std::size_t buffered() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }

 private:
  void restart_region(std::int64_t start_ns);
  bool is_contiguous(const PcmChunk& chunk) const;

  WindowSpec spec_;
  std::size_t window_;
  std::size_t hop_;
  RingBuffer<float> ring_;
  bool started_ = false;
  std::int64_t region_start_ns_ = 0;
  std::int64_t region_samples_ = 0;   // samples received in this region
  std::int64_t next_start_ = 0;       // region offset of the next window
  std::int64_t expected_next_ns_ = 0;
  std::int64_t next_index_ = 0;
  std::int64_t gaps_ = 0;
};

// Convenience over a finite chunk sequence.
std::vector<AnalysisWindow> window_stream(std::span<const PcmChunk> chunks, const WindowSpec& spec);

// floor((D - W) / H) + 1 for D >= W, else 0, evaluated on whole samples.
std::int64_t expected_window_count(std::int64_t stream_samples, const WindowSpec& spec);

}  // namespace edgetag::audio
