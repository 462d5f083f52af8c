#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace edgetag::cli {

struct GoldenResult {
  std::string name;
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  bool shape_ok = false;
  double max_abs_error = 0.0;
  bool passed = false;
};

// Recomputes every log-mel dump listed in `dir`/index.json (WAV window plus
// raw float32 dump and JSON sidecar per case) and compares element-wise.
// Throws Error(Errc::file_missing / Errc::io) for a missing or malformed set.
std::vector<GoldenResult> check_golden(const std::filesystem::path& dir, double tolerance = 1e-4);

}  // namespace edgetag::cli
