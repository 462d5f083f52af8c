#pragma once

#include "edgetag/audio/source.hpp"
#include "edgetag/audio/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace edgetag::engine {

// Table keys: kind, device_rate_hz, device, signal, frequency_hz, amplitude,
// seed, loop. A relative file-playback path resolves against `base_dir`.
nlohmann::json to_json(const audio::SourceConfig& source);
audio::SourceConfig source_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

// Table keys: window_s, hop_s, target_rate_hz.
nlohmann::json to_json(const audio::WindowSpec& spec);
audio::WindowSpec window_from_json(const nlohmann::json& doc);

}  // namespace edgetag::engine
