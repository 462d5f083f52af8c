#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace edgetag::inference {

enum class PipelineKind { embedded_frontend, two_stage, external_spectrogram };
enum class OutputActivation { automatic, none, sigmoid, softmax };

std::string to_string(PipelineKind kind);
std::string to_string(OutputActivation activation);
PipelineKind parse_pipeline_kind(const std::string& text);
OutputActivation parse_output_activation(const std::string& text);

/// Declarative description of one deployable model. Relative paths are
/// resolved against the manifest file's directory when loaded from disk.
struct ModelManifest {
  std::string model_id;
  PipelineKind pipeline_kind = PipelineKind::embedded_frontend;
  std::filesystem::path primary_model_path;
  std::optional<std::filesystem::path> frontend_model_path;
  std::filesystem::path labels_path;
  std::optional<std::string> mel_preset;
  int input_rate_hz = 32000;
  std::int64_t input_samples = 320000;
  OutputActivation output_activation = OutputActivation::automatic;
  int intra_op_threads = 1;
  std::filesystem::path source;  // manifest file, empty when built in code

  // Field-level invariants only; file existence is checked by load_model.
  // Throws Error(Errc::manifest_invalid).
  void validate() const;
};

// Throws Error(Errc::file_missing) or Error(Errc::manifest_invalid).
ModelManifest load_manifest(const std::filesystem::path& path);
ModelManifest manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json manifest_to_json(const ModelManifest& manifest);

/// Ordered class display names; index = line number.
struct LabelMap {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  const std::string& operator[](std::size_t i) const { return names[i]; }
};

// One name per line, UTF-8. Throws Error(Errc::file_missing) or
// Error(Errc::manifest_invalid) for empty, blank or duplicate names.
LabelMap load_labels(const std::filesystem::path& path);
LabelMap make_labels(std::vector<std::string> names);

}  // namespace edgetag::inference
