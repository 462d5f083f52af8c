#include "edgetag/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <string>

namespace edgetag::log {

void init(std::string_view level) {
  auto logger = spdlog::get("edgetag");
  if (!logger) {
    logger = spdlog::stderr_logger_mt("edgetag");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_level(spdlog::level::from_str(std::string(level)));
}

}  // namespace edgetag::log
