#include "edgetag/engine/stream_clock.hpp"

#include "edgetag/error.hpp"

#include <cmath>

namespace edgetag::engine {

StreamClock::StreamClock(double time_scale, std::int64_t wall_start_ns)
    : scale_(time_scale), wall_start_ns_(wall_start_ns), steady_start_(SteadyClock::now()) {
  if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw Error(Errc::config, "time_scale must be positive");
}

std::int64_t StreamClock::stream_ns(SteadyClock::time_point at) const {
  const auto elapsed = std::chrono::duration<double, std::nano>(at - steady_start_).count();
  return static_cast<std::int64_t>(std::llround(elapsed / scale_));
}

SteadyClock::time_point StreamClock::steady_at(std::int64_t stream_ns) const {
  return steady_start_ + std::chrono::duration_cast<SteadyClock::duration>(
                             std::chrono::duration<double, std::nano>(static_cast<double>(stream_ns) * scale_));
}

SteadyClock::duration StreamClock::scaled(double stream_s) const {
  return std::chrono::duration_cast<SteadyClock::duration>(std::chrono::duration<double>(stream_s * scale_));
}

}  // namespace edgetag::engine
