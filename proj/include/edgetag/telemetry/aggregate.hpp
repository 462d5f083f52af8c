#pragma once

#include "edgetag/telemetry/record.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgetag::telemetry {

inline constexpr std::int64_t kDefaultBucketNs = 600'000'000'000;  // 10 minutes

struct Stats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p95 = 0.0;

  bool operator==(const Stats&) const = default;
};

// In-order mean, nearest-rank p95. Requires a non-empty input.
Stats summarize(std::span<const double> values);
// Nearest-rank percentile (0 < pct <= 100) of an unsorted sample.
double nearest_rank(std::vector<double> values, double pct);

/// Statistics over the records of one (bucket, model, scenario) group.
/// temp/latency are absent when no record in the bucket carried them;
/// latency is the backend inference time.
struct AggBucket {
  std::int64_t bucket_start_ns = 0;
  std::string model_id;
  Scenario scenario = Scenario::headless;
  std::size_t count = 0;
  std::optional<Stats> temp;
  std::optional<Stats> latency;

  bool operator==(const AggBucket&) const = default;
};

std::int64_t bucket_start(std::int64_t wall_time_ns, std::int64_t bucket_ns = kDefaultBucketNs);

// Groups records into epoch-aligned buckets, ordered by (start, model_id,
// scenario); empty buckets are omitted. Deterministic.
std::vector<AggBucket> aggregate(std::span<const TelemetryRecord> records, std::int64_t bucket_ns = kDefaultBucketNs);

struct ThermalPolicy {
  double warning_threshold_c = 85.0;
  void validate() const;
};

enum class Crossing { up, down };
std::string to_string(Crossing crossing);

struct ThermalEvent {
  std::size_t bucket_index = 0;
  std::int64_t bucket_start_ns = 0;
  Crossing direction = Crossing::up;
  double max_temp_c = 0.0;

  bool operator==(const ThermalEvent&) const = default;
};

// One event per transition of bucket max temperature across the threshold
// (at-or-above counts as above; the initial state is below). Buckets
// without temperature data leave the state unchanged.
std::vector<ThermalEvent> thermal_events(std::span<const AggBucket> buckets, const ThermalPolicy& policy = {});

/// Incremental form of thermal_events for streaming use.
class ThermalTracker {
 public:
  explicit ThermalTracker(ThermalPolicy policy = {});
  std::optional<ThermalEvent> observe(const AggBucket& bucket);

 private:
  ThermalPolicy policy_;
  bool above_ = false;
  std::size_t index_ = 0;
};

}  // namespace edgetag::telemetry
