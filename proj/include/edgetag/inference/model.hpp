#pragma once

#include "edgetag/audio/types.hpp"
#include "edgetag/inference/manifest.hpp"
#include "edgetag/inference/onnx_graph.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace edgetag::inference {

struct ScoreVector {
  std::string model_id;
  std::vector<float> scores;
};

struct InferenceTiming {
  double frontend_ms = 0.0;
  double classifier_ms = 0.0;
  double inference_ms = 0.0;  // frontend_ms + classifier_ms
};

struct InferenceResult {
  ScoreVector scores;
  InferenceTiming timing;
};

/// A loaded model ready to score analysis windows. Used by one execution
/// context at a time; may be moved between threads.
class ModelHandle {
 public:
  // Loads every graph, cross-checks the manifest against graph metadata and
  // runs one warm-up inference. Errors: file_missing, graph_invalid,
  // shape_mismatch, manifest_invalid.
  static std::unique_ptr<ModelHandle> load(const ModelManifest& manifest);

  ~ModelHandle();

  const ModelManifest& manifest() const;
  const std::string& model_id() const;
  const LabelMap& labels() const;
  // Shape of the tensor the window is fed into (the frontend graph's input
  // for two-stage models).
  std::vector<std::int64_t> input_shape() const;
  // Activation applied on top of the graph output (never `automatic`).
  OutputActivation effective_activation() const;
  std::size_t model_file_bytes() const;

  // Errors: window_mismatch (wrong rate/length), backend_failure.
  InferenceResult infer(const audio::AnalysisWindow& window) const;
  InferenceResult infer(std::span<const float> samples) const;

 private:
  struct Impl;
  explicit ModelHandle(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

struct LabeledScore {
  std::size_t index = 0;
  std::string label;
  float score = 0.0f;
};

// Descending by score, ties by ascending index. Requires 1 <= k <= size
// (Errc::config otherwise) and labels.size() == scores.size().
std::vector<LabeledScore> top_k(const ScoreVector& scores, const LabelMap& labels, std::size_t k);
std::vector<std::size_t> top_k_indices(std::span<const float> scores, std::size_t k);

float sigmoid(float x);
void apply_activation(std::vector<float>& values, OutputActivation activation);

}  // namespace edgetag::inference
