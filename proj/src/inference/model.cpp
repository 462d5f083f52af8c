#include "edgetag/inference/model.hpp"

#include "edgetag/dsp/mel.hpp"
#include "edgetag/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

namespace edgetag::inference {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Concrete feed shape for `numel` values: symbolic dims become 1 except the
// last one, which absorbs the remainder.
std::optional<std::vector<std::int64_t>> feed_shape(const ValueInfo& info, std::int64_t numel) {
  std::vector<std::int64_t> shape = info.shape;
  if (shape.empty()) return std::vector<std::int64_t>{numel};
  std::int64_t known = 1;
  int last_dynamic = -1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] < 0) {
      last_dynamic = static_cast<int>(i);
      shape[i] = 1;
    }
    known *= shape[i];
  }
  if (last_dynamic >= 0) {
    if (known == 0 || numel % known != 0) return std::nullopt;
    shape[static_cast<std::size_t>(last_dynamic)] = numel / known;
    known = numel;
  }
  if (known != numel) return std::nullopt;
  return shape;
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::is_regular_file(path))
    throw Error(Errc::file_missing, fmt::format("{} not found: {}", what, path.string()));
}

const ValueInfo& single_float_input(const OnnxGraph& graph) {
  if (graph.inputs().size() != 1)
    throw Error(Errc::shape_mismatch,
                fmt::format("{}: expected one graph input, found {}", graph.name(), graph.inputs().size()));
  const ValueInfo& info = graph.inputs()[0];
  if (info.dtype != DType::f32)
    throw Error(Errc::shape_mismatch, fmt::format("{}: input '{}' is not float32", graph.name(), info.name));
  return info;
}

}  // namespace

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

void apply_activation(std::vector<float>& values, OutputActivation activation) {
  switch (activation) {
    case OutputActivation::sigmoid:
      for (auto& v : values) v = sigmoid(v);
      break;
    case OutputActivation::softmax: {
      if (values.empty()) break;
      const float mx = *std::max_element(values.begin(), values.end());
      double sum = 0.0;
      for (auto& v : values) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (auto& v : values) v = static_cast<float>(v / sum);
      break;
    }
    case OutputActivation::none:
    case OutputActivation::automatic:
      break;
  }
}

struct ModelHandle::Impl {
  ModelManifest manifest;
  LabelMap labels;
  std::optional<OnnxGraph> frontend;
  std::optional<OnnxGraph> classifier;
  std::optional<dsp::LogMelExtractor> mel;
  bool mel_time_major = false;  // classifier expects (..., frames, mels)
  std::vector<std::int64_t> window_shape;
  std::vector<std::int64_t> classifier_shape;
  OutputActivation activation = OutputActivation::sigmoid;
  std::size_t file_bytes = 0;

  Tensor classifier_input_from_mel(const dsp::MelFrame& frame) const {
    std::vector<float> values = frame.values;
    if (mel_time_major) {
      for (std::size_t m = 0; m < frame.n_mels; ++m)
        for (std::size_t t = 0; t < frame.n_frames; ++t) values[t * frame.n_mels + m] = frame.at(m, t);
    }
    return Tensor::floats(classifier_shape, std::move(values));
  }
};

ModelHandle::ModelHandle(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ModelHandle::~ModelHandle() = default;

std::unique_ptr<ModelHandle> ModelHandle::load(const ModelManifest& manifest) {
  manifest.validate();
  require_file(manifest.primary_model_path, "model file");
  if (manifest.frontend_model_path) require_file(*manifest.frontend_model_path, "frontend model file");
  require_file(manifest.labels_path, "labels file");

  auto impl = std::make_unique<Impl>();
  impl->manifest = manifest;
  impl->labels = load_labels(manifest.labels_path);
  impl->classifier.emplace(OnnxGraph::load(manifest.primary_model_path, manifest.intra_op_threads));
  impl->file_bytes = std::filesystem::file_size(manifest.primary_model_path);
  const auto samples = manifest.input_samples;

  auto check_waveform_input = [&](const OnnxGraph& graph) {
    const ValueInfo& info = single_float_input(graph);
    const std::int64_t declared = info.static_numel();
    if (declared >= 0 && declared != samples)
      throw Error(Errc::shape_mismatch,
                  fmt::format("{}: graph input '{}' {} holds {} samples but manifest '{}' declares input_samples={}",
                              graph.name(), info.name, shape_string(info.shape), declared, manifest.model_id,
                              samples));
    auto shape = feed_shape(info, samples);
    if (!shape)
      throw Error(Errc::shape_mismatch, fmt::format("{}: input {} cannot hold {} samples", graph.name(),
                                                    shape_string(info.shape), samples));
    return *shape;
  };

  switch (manifest.pipeline_kind) {
    case PipelineKind::embedded_frontend:
      impl->window_shape = check_waveform_input(*impl->classifier);
      break;
    case PipelineKind::two_stage: {
      impl->frontend.emplace(OnnxGraph::load(*manifest.frontend_model_path, manifest.intra_op_threads));
      impl->file_bytes += std::filesystem::file_size(*manifest.frontend_model_path);
      impl->window_shape = check_waveform_input(*impl->frontend);
      const ValueInfo& out = impl->frontend->outputs()[0];
      const ValueInfo& in = single_float_input(*impl->classifier);
      const auto produced = out.static_numel(), consumed = in.static_numel();
      if (produced >= 0 && consumed >= 0 && produced != consumed)
        throw Error(Errc::shape_mismatch, fmt::format("frontend output {} does not fit classifier input {}",
                                                      shape_string(out.shape), shape_string(in.shape)));
      break;
    }
    case PipelineKind::external_spectrogram: {
      dsp::MelConfig cfg = dsp::mel_preset(*manifest.mel_preset);
      try {
        cfg.validate(manifest.input_rate_hz);
        impl->mel.emplace(cfg, manifest.input_rate_hz);
      } catch (const Error& e) {
        throw Error(Errc::manifest_invalid, fmt::format("manifest '{}': {}", manifest.model_id, e.what()));
      }
      const auto n_mels = static_cast<std::int64_t>(cfg.n_mels);
      const auto n_frames = static_cast<std::int64_t>(cfg.n_frames(static_cast<std::size_t>(samples)));
      const ValueInfo& in = single_float_input(*impl->classifier);
      const auto& s = in.shape;
      if (s.size() >= 2 && s[s.size() - 1] == n_mels && s[s.size() - 2] == n_frames) impl->mel_time_major = true;
      auto shape = feed_shape(in, n_mels * n_frames);
      if (!shape)
        throw Error(Errc::shape_mismatch,
                    fmt::format("{}: input {} does not hold a {} x {} log-mel ({} preset over {} samples)",
                                impl->classifier->name(), shape_string(in.shape), n_mels, n_frames,
                                *manifest.mel_preset, samples));
      impl->classifier_shape = *shape;
      impl->window_shape = {1, samples};
      break;
    }
  }

  impl->activation = manifest.output_activation;
  if (impl->activation == OutputActivation::automatic) {
    const std::string producer = impl->classifier->output_producer(0);
    impl->activation =
        producer == "Sigmoid" || producer == "Softmax" ? OutputActivation::none : OutputActivation::sigmoid;
  }

  std::unique_ptr<ModelHandle> handle(new ModelHandle(std::move(impl)));
  // warm-up: checks the output width against the label map
  try {
    const std::vector<float> zeros(static_cast<std::size_t>(samples), 0.0f);
    handle->infer(zeros);
  } catch (const Error& e) {
    if (e.code() == Errc::shape_mismatch) throw;
    throw Error(Errc::graph_invalid, fmt::format("{}: warm-up inference failed: {}", manifest.model_id, e.what()));
  }
  return handle;
}

const ModelManifest& ModelHandle::manifest() const { return impl_->manifest; }
const std::string& ModelHandle::model_id() const { return impl_->manifest.model_id; }
const LabelMap& ModelHandle::labels() const { return impl_->labels; }
std::vector<std::int64_t> ModelHandle::input_shape() const { return impl_->window_shape; }
OutputActivation ModelHandle::effective_activation() const { return impl_->activation; }
std::size_t ModelHandle::model_file_bytes() const { return impl_->file_bytes; }

InferenceResult ModelHandle::infer(const audio::AnalysisWindow& window) const {
  if (window.sample_rate_hz != impl_->manifest.input_rate_hz)
    throw Error(Errc::window_mismatch, fmt::format("window rate {} Hz differs from model rate {} Hz",
                                                   window.sample_rate_hz, impl_->manifest.input_rate_hz));
  if (!window.samples) throw Error(Errc::window_mismatch, "window has no samples");
  return infer(*window.samples);
}

InferenceResult ModelHandle::infer(std::span<const float> samples) const {
  const Impl& m = *impl_;
  if (static_cast<std::int64_t>(samples.size()) != m.manifest.input_samples)
    throw Error(Errc::window_mismatch, fmt::format("window holds {} samples, model '{}' expects {}", samples.size(),
                                                   m.manifest.model_id, m.manifest.input_samples));
  InferenceResult result;
  result.scores.model_id = m.manifest.model_id;
  Tensor waveform = Tensor::floats(m.window_shape, std::vector<float>(samples.begin(), samples.end()));

  std::vector<Tensor> outputs;
  switch (m.manifest.pipeline_kind) {
    case PipelineKind::embedded_frontend: {
      const auto t0 = Clock::now();
      outputs = m.classifier->run(std::move(waveform));
      result.timing.classifier_ms = ms_since(t0);
      break;
    }
    case PipelineKind::two_stage: {
      const auto t0 = Clock::now();
      auto spec = m.frontend->run(std::move(waveform));
      result.timing.frontend_ms = ms_since(t0);
      const auto t1 = Clock::now();
      Tensor features = std::move(spec.at(0));
      const auto shape = feed_shape(m.classifier->inputs()[0], static_cast<std::int64_t>(features.numel()));
      if (!shape || features.dtype != DType::f32)
        throw Error(Errc::shape_mismatch,
                    fmt::format("frontend output {} does not fit classifier input {}", features.shape_string(),
                                shape_string(m.classifier->inputs()[0].shape)));
      features.shape = *shape;
      outputs = m.classifier->run(std::move(features));
      result.timing.classifier_ms = ms_since(t1);
      break;
    }
    case PipelineKind::external_spectrogram: {
      const auto t0 = Clock::now();
      Tensor features = m.classifier_input_from_mel(m.mel->compute(samples));
      result.timing.frontend_ms = ms_since(t0);
      const auto t1 = Clock::now();
      outputs = m.classifier->run(std::move(features));
      result.timing.classifier_ms = ms_since(t1);
      break;
    }
  }
  result.timing.inference_ms = result.timing.frontend_ms + result.timing.classifier_ms;

  const Tensor& out = outputs.at(0);
  if (out.dtype != DType::f32 || out.numel() != m.labels.size())
    throw Error(Errc::shape_mismatch,
                fmt::format("model '{}' emits {} {} scores but its label map has {} entries", m.manifest.model_id,
                            to_string(out.dtype), out.shape_string(), m.labels.size()));
  result.scores.scores = out.f32;
  apply_activation(result.scores.scores, m.activation);
  for (auto& v : result.scores.scores) {
    if (!std::isfinite(v))
      throw Error(Errc::backend_failure, fmt::format("model '{}' produced a non-finite score", m.manifest.model_id));
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return result;
}

std::vector<std::size_t> top_k_indices(std::span<const float> scores, std::size_t k) {
  if (k < 1 || k > scores.size())
    throw Error(Errc::config, fmt::format("top-k k={} outside [1, {}]", k, scores.size()));
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  order.resize(k);
  return order;
}

std::vector<LabeledScore> top_k(const ScoreVector& scores, const LabelMap& labels, std::size_t k) {
  if (labels.size() != scores.scores.size())
    throw Error(Errc::config, fmt::format("{} scores but {} labels", scores.scores.size(), labels.size()));
  std::vector<LabeledScore> out;
  for (std::size_t i : top_k_indices(scores.scores, k)) out.push_back({i, labels[i], scores.scores[i]});
  return out;
}

}  // namespace edgetag::inference
