#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace edgetag::telemetry {

enum class Scenario { headless, gui };

std::string to_string(Scenario scenario);
// Throws Error(Errc::config) for anything but "headless" / "gui".
Scenario parse_scenario(const std::string& text);

/// One telemetry sample. Prediction-triggered records carry timings;
/// periodic samples carry only the temperature. cpu_temp_c is absent when
/// the thermal interface is unavailable or the reading was rejected.
struct TelemetryRecord {
  std::int64_t wall_time_ns = 0;
  std::string model_id;
  Scenario scenario = Scenario::headless;
  std::optional<double> cpu_temp_c;
  std::optional<double> inference_ms;
  std::optional<double> total_ms;

  bool operator==(const TelemetryRecord&) const = default;
};

// Sanity band for temperature readings, inclusive.
inline constexpr double kMinPlausibleTempC = -20.0;
inline constexpr double kMaxPlausibleTempC = 120.0;

}  // namespace edgetag::telemetry
