#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace edgetag {

using SteadyClock = std::chrono::steady_clock;
using SystemClock = std::chrono::system_clock;

inline std::int64_t to_ns(SystemClock::time_point tp) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(tp.time_since_epoch()).count();
}

inline double ms_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

// Extended ISO 8601 UTC with nanoseconds: 2026-10-15T19:51:14.123456789Z
std::string format_iso8601(std::int64_t unix_ns);
std::optional<std::int64_t> parse_iso8601(std::string_view text);

// Basic-format variant safe for file names: 20261015T195114.123Z
std::string format_iso8601_basic_ms(std::int64_t unix_ns);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace edgetag
