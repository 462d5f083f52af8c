#include "edgetag/telemetry/record.hpp"

#include "edgetag/error.hpp"

namespace edgetag::telemetry {

std::string to_string(Scenario scenario) { return scenario == Scenario::headless ? "headless" : "gui"; }

Scenario parse_scenario(const std::string& text) {
  if (text == "headless") return Scenario::headless;
  if (text == "gui") return Scenario::gui;
  throw Error(Errc::config, "unknown scenario '" + text + "' (headless, gui)");
}

}  // namespace edgetag::telemetry
