#include "edgetag/engine/recorder.hpp"

#include "edgetag/audio/wav.hpp"
#include "edgetag/error.hpp"
#include "edgetag/time_util.hpp"

#include <fmt/format.h>

namespace edgetag::engine {

std::string recording_filename(std::int64_t window_start_wall_ns, std::int64_t window_index) {
  return fmt::format("{}_{}.wav", format_iso8601_basic_ms(window_start_wall_ns), window_index);
}

std::filesystem::path write_audio(const audio::AnalysisWindow& window, const std::filesystem::path& dir,
                                  std::int64_t window_start_wall_ns) {
  if (!window.samples) throw Error(Errc::io, "window has no samples");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, fmt::format("cannot create recordings directory {}: {}", dir.string(), ec.message()));
  const auto path = dir / recording_filename(window_start_wall_ns, window.index);
  audio::write_wav_float(path, *window.samples, window.sample_rate_hz);
  return path;
}

}  // namespace edgetag::engine
