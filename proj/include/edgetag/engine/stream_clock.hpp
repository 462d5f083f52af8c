#pragma once

#include "edgetag/time_util.hpp"

#include <cstdint>

namespace edgetag::engine {

/// Maps elapsed monotonic time onto the stream timeline. With time_scale s,
/// one stream second takes s wall seconds; wall timestamps for telemetry are
/// the run's start wall time plus the stream offset.
class StreamClock {
 public:
  explicit StreamClock(double time_scale = 1.0, std::int64_t wall_start_ns = to_ns(SystemClock::now()));

  double time_scale() const { return scale_; }
  std::int64_t wall_start_ns() const { return wall_start_ns_; }
  SteadyClock::time_point steady_start() const { return steady_start_; }

  std::int64_t stream_ns(SteadyClock::time_point at) const;
  std::int64_t now_stream_ns() const { return stream_ns(SteadyClock::now()); }
  std::int64_t wall_ns_at(std::int64_t stream_ns) const { return wall_start_ns_ + stream_ns; }
  std::int64_t now_wall_ns() const { return wall_ns_at(now_stream_ns()); }
  SteadyClock::time_point steady_at(std::int64_t stream_ns) const;
  // Monotonic duration of `stream_s` stream seconds.
  SteadyClock::duration scaled(double stream_s) const;

 private:
  double scale_;
  std::int64_t wall_start_ns_;
  SteadyClock::time_point steady_start_;
};

}  // namespace edgetag::engine
