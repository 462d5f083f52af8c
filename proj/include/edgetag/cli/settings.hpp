#pragma once

#include "edgetag/control/server.hpp"
#include "edgetag/engine/engine.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace edgetag::cli {

/// Effective configuration of `edge-tagger run`: defaults, then the config
/// file, then command-line overrides.
struct RunSettings {
  std::filesystem::path model;  // manifest file
  engine::EngineConfig engine;  // manifest is loaded separately from `model`
  bool api = true;
  control::Endpoint listen;
  std::optional<std::filesystem::path> models_dir;
  std::optional<std::filesystem::path> ui_dir;
  std::string log_level = "info";
};

// Relative paths resolve against `base_dir`; unknown keys are rejected
// (Errc::config). Missing keys keep the values already in `into`.
void apply_settings(const nlohmann::json& doc, const std::filesystem::path& base_dir, RunSettings& into);
RunSettings settings_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
// Canonical form with absolute paths; settings_from_json re-parses it to the
// same settings.
nlohmann::json settings_to_json(const RunSettings& settings);

}  // namespace edgetag::cli
