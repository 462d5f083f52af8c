#include "edgetag/audio/types.hpp"

#include "edgetag/error.hpp"

#include <cmath>

namespace edgetag::audio {
namespace {

std::size_t whole_samples(double seconds, int rate, const char* what) {
  const double exact = seconds * rate;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-6)
    throw Error(Errc::config, std::string(what) + " is not a whole number of samples at the target rate");
  return static_cast<std::size_t>(rounded);
}

}  // namespace

void validate(const PcmChunk& chunk) {
  if (chunk.sample_rate_hz <= 0) throw Error(Errc::config, "chunk sample rate must be positive");
  if (chunk.samples.empty()) throw Error(Errc::config, "chunk has no samples");
  for (float s : chunk.samples) {
    if (!std::isfinite(s) || s < -1.0f || s > 1.0f)
      throw Error(Errc::config, "chunk sample outside [-1, 1] or non-finite");
  }
}

std::size_t WindowSpec::window_samples() const {
  return whole_samples(window_s, target_rate_hz, "window_s");
}

std::size_t WindowSpec::hop_samples() const { return whole_samples(hop_s, target_rate_hz, "hop_s"); }

void WindowSpec::validate() const {
  if (target_rate_hz <= 0) throw Error(Errc::config, "target_rate_hz must be positive");
  if (!(hop_s > 0.0) || !(hop_s <= window_s))
    throw Error(Errc::config, "window spec requires 0 < hop_s <= window_s");
  if (window_samples() == 0 || hop_samples() == 0)
    throw Error(Errc::config, "window and hop must span at least one sample");
}

AnalysisWindow make_window(std::vector<float> samples, int sample_rate_hz, std::int64_t index,
                           std::int64_t start_time_ns) {
  AnalysisWindow w;
  w.samples = std::make_shared<const std::vector<float>>(std::move(samples));
  w.sample_rate_hz = sample_rate_hz;
  w.index = index;
  w.start_time_ns = start_time_ns;
  w.ready_at = std::chrono::steady_clock::now();
  return w;
}

}  // namespace edgetag::audio
