#pragma once

#include "edgetag/audio/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace edgetag::engine {

// "<iso8601-basic>_<window_index>.wav" for the window's wall start time.
std::string recording_filename(std::int64_t window_start_wall_ns, std::int64_t window_index);

// Writes the window as mono 32-bit float WAV into `dir` (created on demand)
// and returns the file path. Throws Error(Errc::io) on failure.
std::filesystem::path write_audio(const audio::AnalysisWindow& window, const std::filesystem::path& dir,
                                  std::int64_t window_start_wall_ns);

}  // namespace edgetag::engine
