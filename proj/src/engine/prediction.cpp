#include "edgetag/engine/prediction.hpp"

#include "edgetag/time_util.hpp"

namespace edgetag::engine {

nlohmann::json to_json(const Prediction& p) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& s : p.top_k) top.push_back({{"index", s.index}, {"label", s.label}, {"score", s.score}});
  return {{"model_id", p.model_id},
          {"window_index", p.window_index},
          {"window_start", format_iso8601(p.window_start_ns)},
          {"window_start_ns", p.window_start_ns},
          {"top_k", std::move(top)},
          {"recording_time_s", p.recording_time_s},
          {"inference_time_ms", p.inference_time_ms},
          {"total_time_ms", p.total_time_ms}};
}

Prediction prediction_from_json(const nlohmann::json& doc) {
  Prediction p;
  p.model_id = doc.at("model_id").get<std::string>();
  p.window_index = doc.at("window_index").get<std::int64_t>();
  p.window_start_ns = doc.at("window_start_ns").get<std::int64_t>();
  for (const auto& s : doc.at("top_k"))
    p.top_k.push_back({s.at("index").get<std::size_t>(), s.at("label").get<std::string>(), s.at("score").get<float>()});
  p.recording_time_s = doc.at("recording_time_s").get<double>();
  p.inference_time_ms = doc.at("inference_time_ms").get<double>();
  p.total_time_ms = doc.at("total_time_ms").get<double>();
  return p;
}

nlohmann::json to_json(const OverrunCounts& c) {
  return {{"windows_dropped", c.windows_dropped},
          {"backend_failures", c.backend_failures},
          {"stream_gaps", c.stream_gaps},
          {"write_failures", c.write_failures}};
}

}  // namespace edgetag::engine
