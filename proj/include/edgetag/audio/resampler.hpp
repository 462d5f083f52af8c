#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace edgetag::audio {

/// Kaiser-windowed sinc interpolation kernel for a rational rate change
/// src -> dst, reduced to up/down factors L/M. Designed for >= 70 dB
/// stop-band attenuation with the stop band starting at the lower Nyquist.
class ResampleKernel {
 public:
  ResampleKernel(int src_rate_hz, int dst_rate_hz);

  int up() const { return up_; }
  int down() const { return down_; }
  // Taps reach `half_width()` input samples either side of the output instant.
  int half_width() const { return half_width_; }
  int taps() const { return 2 * half_width_; }
  double cutoff() const { return cutoff_; }

  // Fills `taps()` weights for output phase `phase` (0 <= phase < up()). Tap t
  // applies to input sample floor(t_out) - half_width() + 1 + t.
  void weights(std::int64_t phase, std::span<float> out) const;
  // Precomputed table row, or nullptr when up() is too large to tabulate.
  const float* table_row(std::int64_t phase) const;

 private:
  double tap_value(double distance) const;

  int up_ = 1;
  int down_ = 1;
  int half_width_ = 0;
  double cutoff_ = 0.5;  // cycles per input sample
  double beta_ = 0.0;
  double i0_beta_ = 1.0;
  std::vector<float> table_;
};

// One-shot conversion. Output length is round(n * dst / src); samples before
// the start and past the end are treated as zero. Equal rates copy verbatim.
std::vector<float> resample(std::span<const float> input, int src_rate_hz, int dst_rate_hz);

// Expected output length of resample() for `input_length` samples.
std::size_t resampled_length(std::size_t input_length, int src_rate_hz, int dst_rate_hz);

/// Incremental form of resample(): feeding a signal in arbitrary pieces and
/// then calling flush() yields exactly the one-shot output.
class StreamingResampler {
 public:
  StreamingResampler(int src_rate_hz, int dst_rate_hz);

  void process(std::span<const float> input, std::vector<float>& out);
  void flush(std::vector<float>& out);
  // Forgets all history (used after a stream gap).
  void reset();

  int src_rate_hz() const { return src_; }
  int dst_rate_hz() const { return dst_; }
  // Output samples produced so far; output j sits at input time j * src / dst.
  std::int64_t produced() const { return next_out_; }

 private:
  void emit_ready(std::int64_t limit_in, std::vector<float>& out);

  int src_;
  int dst_;
  std::shared_ptr<const ResampleKernel> kernel_;
  std::vector<float> history_;
  std::int64_t history_start_ = 0;
  std::int64_t total_in_ = 0;
  std::int64_t next_out_ = 0;
  std::vector<float> scratch_;
};

}  // namespace edgetag::audio
