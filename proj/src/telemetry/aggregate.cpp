#include "edgetag/telemetry/aggregate.hpp"

#include "edgetag/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace edgetag::telemetry {

double nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) throw Error(Errc::config, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

Stats summarize(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::config, "statistics of an empty sample");
  Stats s;
  double sum = 0.0;
  s.min = values[0];
  s.max = values[0];
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  s.p95 = nearest_rank(std::vector<double>(values.begin(), values.end()), 95.0);
  return s;
}

std::int64_t bucket_start(std::int64_t wall_time_ns, std::int64_t bucket_ns) {
  std::int64_t q = wall_time_ns / bucket_ns;
  if (wall_time_ns % bucket_ns != 0 && wall_time_ns < 0) --q;
  return q * bucket_ns;
}

std::vector<AggBucket> aggregate(std::span<const TelemetryRecord> records, std::int64_t bucket_ns) {
  if (bucket_ns <= 0) throw Error(Errc::config, "bucket width must be positive");
  struct Acc {
    std::size_t count = 0;
    std::vector<double> temps;
    std::vector<double> lats;
  };
  std::map<std::tuple<std::int64_t, std::string, Scenario>, Acc> groups;
  for (const auto& r : records) {
    auto& acc = groups[{bucket_start(r.wall_time_ns, bucket_ns), r.model_id, r.scenario}];
    ++acc.count;
    if (r.cpu_temp_c) acc.temps.push_back(*r.cpu_temp_c);
    if (r.inference_ms) acc.lats.push_back(*r.inference_ms);
  }
  std::vector<AggBucket> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    AggBucket b;
    b.bucket_start_ns = std::get<0>(key);
    b.model_id = std::get<1>(key);
    b.scenario = std::get<2>(key);
    b.count = acc.count;
    if (!acc.temps.empty()) b.temp = summarize(acc.temps);
    if (!acc.lats.empty()) b.latency = summarize(acc.lats);
    out.push_back(std::move(b));
  }
  return out;
}

void ThermalPolicy::validate() const {
  if (!(warning_threshold_c > 0.0)) throw Error(Errc::config, "thermal warning threshold must be positive");
}

std::string to_string(Crossing crossing) { return crossing == Crossing::up ? "cross-up" : "cross-down"; }

ThermalTracker::ThermalTracker(ThermalPolicy policy) : policy_(policy) { policy_.validate(); }

std::optional<ThermalEvent> ThermalTracker::observe(const AggBucket& bucket) {
  const std::size_t index = index_++;
  if (!bucket.temp) return std::nullopt;
  const bool above = bucket.temp->max >= policy_.warning_threshold_c;
  if (above == above_) return std::nullopt;
  above_ = above;
  return ThermalEvent{index, bucket.bucket_start_ns, above ? Crossing::up : Crossing::down, bucket.temp->max};
}

std::vector<ThermalEvent> thermal_events(std::span<const AggBucket> buckets, const ThermalPolicy& policy) {
  ThermalTracker tracker(policy);
  std::vector<ThermalEvent> events;
  for (const auto& b : buckets)
    if (auto e = tracker.observe(b)) events.push_back(*e);
  return events;
}

}  // namespace edgetag::telemetry
