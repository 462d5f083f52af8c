#pragma once

#include <spdlog/spdlog.h>

#include <string_view>

namespace edgetag::log {

// Installs a stderr logger with level-prefixed lines ("[warning] ...").
void init(std::string_view level = "info");

}  // namespace edgetag::log
