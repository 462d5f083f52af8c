#include "edgetag/inference/manifest.hpp"

#include "edgetag/dsp/mel.hpp"
#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>

namespace edgetag::inference {

namespace {

[[noreturn]] void invalid(const std::string& context, const std::string& message) {
  throw Error(Errc::manifest_invalid, fmt::format("{}: {}", context, message));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string relative_or_absolute(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (base.empty()) return p.string();
  const auto rel = p.lexically_relative(base);
  return rel.empty() || rel.string().starts_with("..") ? p.string() : rel.generic_string();
}

}  // namespace

std::string to_string(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::embedded_frontend: return "embedded-frontend";
    case PipelineKind::two_stage: return "two-stage";
    case PipelineKind::external_spectrogram: return "external-spectrogram";
  }
  return "unknown";
}

std::string to_string(OutputActivation activation) {
  switch (activation) {
    case OutputActivation::automatic: return "auto";
    case OutputActivation::none: return "none";
    case OutputActivation::sigmoid: return "sigmoid";
    case OutputActivation::softmax: return "softmax";
  }
  return "unknown";
}

PipelineKind parse_pipeline_kind(const std::string& text) {
  for (auto k : {PipelineKind::embedded_frontend, PipelineKind::two_stage, PipelineKind::external_spectrogram})
    if (to_string(k) == text) return k;
  throw Error(Errc::manifest_invalid,
              fmt::format("unknown pipeline_kind '{}' (embedded-frontend, two-stage, external-spectrogram)", text));
}

OutputActivation parse_output_activation(const std::string& text) {
  for (auto a : {OutputActivation::automatic, OutputActivation::none, OutputActivation::sigmoid,
                 OutputActivation::softmax})
    if (to_string(a) == text) return a;
  throw Error(Errc::manifest_invalid, fmt::format("unknown output_activation '{}' (auto, none, sigmoid, softmax)", text));
}

void ModelManifest::validate() const {
  const std::string ctx = model_id.empty() ? std::string("manifest") : "manifest '" + model_id + "'";
  if (model_id.empty()) invalid(ctx, "model_id is empty");
  if (primary_model_path.empty()) invalid(ctx, "primary_model_path is empty");
  if (labels_path.empty()) invalid(ctx, "labels_path is empty");
  switch (pipeline_kind) {
    case PipelineKind::embedded_frontend:
      if (frontend_model_path) invalid(ctx, "embedded-frontend models take no frontend_model_path");
      if (mel_preset) invalid(ctx, "embedded-frontend models take no mel_preset");
      break;
    case PipelineKind::two_stage:
      if (!frontend_model_path) invalid(ctx, "two-stage models require frontend_model_path");
      if (mel_preset) invalid(ctx, "two-stage models take no mel_preset");
      break;
    case PipelineKind::external_spectrogram:
      if (!mel_preset) invalid(ctx, "external-spectrogram models require mel_preset");
      if (frontend_model_path) invalid(ctx, "external-spectrogram models take no frontend_model_path");
      break;
  }
  if (mel_preset) {
    const auto names = dsp::mel_preset_names();
    if (std::find(names.begin(), names.end(), *mel_preset) == names.end())
      invalid(ctx, fmt::format("unknown mel_preset '{}'", *mel_preset));
  }
  if (input_rate_hz <= 0) invalid(ctx, "input_rate_hz must be positive");
  if (input_samples <= 0) invalid(ctx, "input_samples must be positive");
  if (intra_op_threads < 1) invalid(ctx, "intra_op_threads must be >= 1");
}

ModelManifest manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  const std::string ctx = "manifest";
  if (!doc.is_object()) invalid(ctx, "document is not a table");
  try {
    reject_unknown_keys(doc,
                        {"model_id", "pipeline_kind", "primary_model_path", "frontend_model_path", "labels_path",
                         "mel_preset", "input_rate_hz", "input_samples", "output_activation", "intra_op_threads"},
                        ctx);
  } catch (const Error& e) {
    throw Error(Errc::manifest_invalid, e.what());
  }
  auto str = [&](const char* key, bool required) -> std::optional<std::string> {
    if (!doc.contains(key)) {
      if (required) invalid(ctx, fmt::format("missing required field '{}'", key));
      return std::nullopt;
    }
    if (!doc[key].is_string()) invalid(ctx, fmt::format("field '{}' must be a string", key));
    return doc[key].get<std::string>();
  };
  auto integer = [&](const char* key, std::int64_t fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number_integer()) invalid(ctx, fmt::format("field '{}' must be an integer", key));
    return doc[key].get<std::int64_t>();
  };

  ModelManifest m;
  m.model_id = *str("model_id", true);
  m.pipeline_kind = parse_pipeline_kind(*str("pipeline_kind", true));
  m.primary_model_path = resolve(base_dir, *str("primary_model_path", true));
  if (auto v = str("frontend_model_path", false)) m.frontend_model_path = resolve(base_dir, *v);
  m.labels_path = resolve(base_dir, *str("labels_path", true));
  m.mel_preset = str("mel_preset", false);
  m.input_rate_hz = static_cast<int>(integer("input_rate_hz", m.input_rate_hz));
  m.input_samples = integer("input_samples", m.input_samples);
  if (auto v = str("output_activation", false)) m.output_activation = parse_output_activation(*v);
  m.intra_op_threads = static_cast<int>(integer("intra_op_threads", m.intra_op_threads));
  m.validate();
  return m;
}

ModelManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(Errc::file_missing, fmt::format("manifest not found: {}", path.string()));
  nlohmann::json doc;
  try {
    doc = load_structured_file(path);
  } catch (const Error& e) {
    throw Error(Errc::manifest_invalid, e.what());
  }
  ModelManifest m = manifest_from_json(doc, path.parent_path());
  m.source = path;
  return m;
}

nlohmann::json manifest_to_json(const ModelManifest& m) {
  const auto base = m.source.empty() ? std::filesystem::path() : m.source.parent_path();
  nlohmann::json j;
  j["model_id"] = m.model_id;
  j["pipeline_kind"] = to_string(m.pipeline_kind);
  j["primary_model_path"] = relative_or_absolute(m.primary_model_path, base);
  if (m.frontend_model_path) j["frontend_model_path"] = relative_or_absolute(*m.frontend_model_path, base);
  j["labels_path"] = relative_or_absolute(m.labels_path, base);
  if (m.mel_preset) j["mel_preset"] = *m.mel_preset;
  j["input_rate_hz"] = m.input_rate_hz;
  j["input_samples"] = m.input_samples;
  j["output_activation"] = to_string(m.output_activation);
  j["intra_op_threads"] = m.intra_op_threads;
  return j;
}

LabelMap make_labels(std::vector<std::string> names) {
  if (names.empty()) throw Error(Errc::manifest_invalid, "label map is empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].find_first_not_of(" \t") == std::string::npos)
      throw Error(Errc::manifest_invalid, fmt::format("label {} is blank", i));
    if (!seen.insert(names[i]).second)
      throw Error(Errc::manifest_invalid, fmt::format("label '{}' appears twice", names[i]));
  }
  return LabelMap{std::move(names)};
}

LabelMap load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_missing, fmt::format("labels file not found: {}", path.string()));
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    names.push_back(line);
  }
  if (!names.empty() && names.front().starts_with("\xEF\xBB\xBF")) names.front().erase(0, 3);
  try {
    return make_labels(std::move(names));
  } catch (const Error& e) {
    throw Error(Errc::manifest_invalid, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace edgetag::inference
