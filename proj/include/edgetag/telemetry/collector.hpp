#pragma once

#include "edgetag/telemetry/aggregate.hpp"
#include "edgetag/telemetry/record.hpp"

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace edgetag::telemetry {

/// Single consumer context for telemetry records. post() never blocks the
/// caller on I/O; records are appended to the raw CSV (when configured) and
/// kept for aggregation. Buckets are published as soon as a later record
/// closes them, and again at close() for the trailing buckets.
class TelemetryCollector {
 public:
  struct Options {
    std::optional<std::filesystem::path> raw_csv_path;
    std::int64_t bucket_ns = kDefaultBucketNs;
    ThermalPolicy policy;
    std::function<void(const AggBucket&)> on_bucket;
    std::function<void(const ThermalEvent&)> on_thermal_event;
  };

  explicit TelemetryCollector(Options options);
  ~TelemetryCollector();
  TelemetryCollector(const TelemetryCollector&) = delete;
  TelemetryCollector& operator=(const TelemetryCollector&) = delete;

  void post(TelemetryRecord record);
  // Drains pending records, publishes open buckets, flushes the CSV and
  // joins the worker. Idempotent.
  void close();

  std::vector<TelemetryRecord> snapshot() const;
  std::vector<AggBucket> buckets() const;
  std::vector<ThermalEvent> events() const;
  std::size_t record_count() const;

 private:
  void worker();
  void consume(const TelemetryRecord& record);
  void close_bucket(std::int64_t start);

  Options options_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<TelemetryRecord> pending_;
  bool closing_ = false;
  bool closed_ = false;

  // owned by the worker (read under mutex_ by accessors)
  std::vector<TelemetryRecord> records_;
  std::map<std::int64_t, std::vector<std::size_t>> open_;  // bucket start -> record indices
  std::vector<AggBucket> closed_buckets_;
  std::vector<ThermalEvent> events_;
  ThermalTracker tracker_;
  std::ofstream csv_;
  std::thread thread_;
};

}  // namespace edgetag::telemetry
