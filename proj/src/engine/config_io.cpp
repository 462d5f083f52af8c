#include "edgetag/engine/config_io.hpp"

#include "edgetag/error.hpp"
#include "edgetag/structured_file.hpp"

namespace edgetag::engine {

nlohmann::json to_json(const audio::SourceConfig& s) {
  return {{"kind", audio::to_string(s.kind)},
          {"device_rate_hz", s.device_rate_hz},
          {"device", s.device_id},
          {"signal", audio::to_string(s.signal)},
          {"frequency_hz", s.frequency_hz},
          {"amplitude", s.amplitude},
          {"seed", s.seed},
          {"loop", s.loop}};
}

audio::SourceConfig source_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  const ConfigReader r(doc, "source");
  r.allow({"kind", "device_rate_hz", "device", "signal", "frequency_hz", "amplitude", "seed", "loop"});
  audio::SourceConfig s;
  if (auto v = r.string("kind")) s.kind = audio::parse_source_kind(*v);
  s.device_rate_hz = static_cast<int>(r.integer("device_rate_hz", s.device_rate_hz));
  s.device_id = r.string("device", s.device_id);
  if (s.kind == audio::SourceKind::file_playback && !s.device_id.empty() && !base_dir.empty() &&
      std::filesystem::path(s.device_id).is_relative())
    s.device_id = (base_dir / s.device_id).lexically_normal().string();
  if (auto v = r.string("signal")) s.signal = audio::parse_synthetic_signal(*v);
  s.frequency_hz = r.number("frequency_hz", s.frequency_hz);
  s.amplitude = r.number("amplitude", s.amplitude);
  const auto seed = r.integer("seed", static_cast<std::int64_t>(s.seed));
  if (seed < 0) throw Error(Errc::config, "source: 'seed' must not be negative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.loop = r.boolean("loop", s.loop);
  if (s.device_rate_hz <= 0) throw Error(Errc::config, "source: 'device_rate_hz' must be positive");
  return s;
}

nlohmann::json to_json(const audio::WindowSpec& w) {
  return {{"window_s", w.window_s}, {"hop_s", w.hop_s}, {"target_rate_hz", w.target_rate_hz}};
}

audio::WindowSpec window_from_json(const nlohmann::json& doc) {
  const ConfigReader r(doc, "window");
  r.allow({"window_s", "hop_s", "target_rate_hz"});
  audio::WindowSpec w;
  w.window_s = r.number("window_s", w.window_s);
  w.hop_s = r.number("hop_s", w.hop_s);
  w.target_rate_hz = static_cast<int>(r.integer("target_rate_hz", w.target_rate_hz));
  w.validate();
  return w;
}

}  // namespace edgetag::engine
