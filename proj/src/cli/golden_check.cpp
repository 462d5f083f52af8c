#include "edgetag/cli/golden_check.hpp"

#include "edgetag/audio/wav.hpp"
#include "edgetag/dsp/mel.hpp"
#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

namespace edgetag::cli {

std::vector<GoldenResult> check_golden(const std::filesystem::path& dir, double tolerance) {
  const auto index = load_structured_file(dir / "index.json");
  std::vector<GoldenResult> results;
  try {
    const auto preset_name = index.at("preset").get<std::string>();
    const auto preset = dsp::mel_preset(preset_name);
    for (const auto& entry : index.at("windows")) {
      GoldenResult r;
      r.name = entry.get<std::string>();
      const auto wav = audio::read_wav(dir / (r.name + ".wav"));
      const auto sidecar = load_structured_file(dir / fmt::format("{}.{}.json", r.name, preset_name));
      const auto rows = sidecar.at("shape").at(0).get<std::size_t>();
      const auto cols = sidecar.at("shape").at(1).get<std::size_t>();
      std::vector<float> expected(rows * cols);
      const auto dump = dir / fmt::format("{}.{}.f32", r.name, preset_name);
      std::ifstream raw(dump, std::ios::binary);
      raw.read(reinterpret_cast<char*>(expected.data()), static_cast<std::streamsize>(expected.size() * sizeof(float)));
      if (!raw) throw Error(Errc::io, fmt::format("{} is shorter than its declared shape", dump.string()));

      const auto mel = dsp::log_mel(wav.samples, wav.sample_rate_hz, preset);
      r.n_mels = mel.n_mels;
      r.n_frames = mel.n_frames;
      r.shape_ok = mel.n_mels == rows && mel.n_frames == cols;
      if (r.shape_ok)
        for (std::size_t i = 0; i < expected.size(); ++i)
          r.max_abs_error = std::max(r.max_abs_error, std::abs(static_cast<double>(mel.values[i]) - expected[i]));
      r.passed = r.shape_ok && r.max_abs_error <= tolerance;
      results.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::io, fmt::format("malformed golden index in {}: {}", dir.string(), e.what()));
  }
  return results;
}

}  // namespace edgetag::cli
