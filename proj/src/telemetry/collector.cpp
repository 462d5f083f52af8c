#include "edgetag/telemetry/collector.hpp"

#include "edgetag/error.hpp"
#include "edgetag/telemetry/csv.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace edgetag::telemetry {

TelemetryCollector::TelemetryCollector(Options options)
    : options_(std::move(options)), tracker_(options_.policy) {
  if (options_.bucket_ns <= 0) throw Error(Errc::config, "bucket width must be positive");
  if (options_.raw_csv_path) {
    const auto& path = *options_.raw_csv_path;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    csv_.open(path, std::ios::binary | std::ios::trunc);
    if (!csv_) throw Error(Errc::io, fmt::format("cannot open telemetry CSV {}", path.string()));
    csv_ << kRawCsvHeader << '\n';
    csv_.flush();
  }
  thread_ = std::thread([this] { worker(); });
}

TelemetryCollector::~TelemetryCollector() { close(); }

void TelemetryCollector::post(TelemetryRecord record) {
  {
    std::lock_guard lock(mutex_);
    if (closing_) return;
    pending_.push_back(std::move(record));
  }
  cv_.notify_one();
}

void TelemetryCollector::close() {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    closing_ = true;
  }
  cv_.notify_one();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  closed_ = true;
}

void TelemetryCollector::worker() {
  std::unique_lock lock(mutex_);
  for (;;) {
    cv_.wait(lock, [this] { return closing_ || !pending_.empty(); });
    while (!pending_.empty()) {
      TelemetryRecord record = std::move(pending_.front());
      pending_.pop_front();
      lock.unlock();
      if (csv_.is_open()) {
        csv_ << raw_csv_row(record) << '\n';
        csv_.flush();
      }
      lock.lock();
      consume(record);
    }
    if (closing_) break;
  }
  while (!open_.empty()) close_bucket(open_.begin()->first);
  if (csv_.is_open()) {
    csv_.flush();
    if (!csv_) spdlog::warn("telemetry CSV write failed");
    csv_.close();
  }
}

// Called with mutex_ held.
void TelemetryCollector::consume(const TelemetryRecord& record) {
  const std::int64_t start = bucket_start(record.wall_time_ns, options_.bucket_ns);
  while (!open_.empty() && open_.begin()->first < start) close_bucket(open_.begin()->first);
  open_[start].push_back(records_.size());
  records_.push_back(record);
}

// Called with mutex_ held.
void TelemetryCollector::close_bucket(std::int64_t start) {
  const auto it = open_.find(start);
  if (it == open_.end()) return;
  std::vector<TelemetryRecord> members;
  members.reserve(it->second.size());
  for (std::size_t i : it->second) members.push_back(records_[i]);
  open_.erase(it);
  for (auto& bucket : aggregate(members, options_.bucket_ns)) {
    closed_buckets_.push_back(bucket);
    if (options_.on_bucket) options_.on_bucket(bucket);
    if (auto event = tracker_.observe(bucket)) {
      events_.push_back(*event);
      if (options_.on_thermal_event) options_.on_thermal_event(*event);
    }
  }
}

std::vector<TelemetryRecord> TelemetryCollector::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<AggBucket> TelemetryCollector::buckets() const {
  std::lock_guard lock(mutex_);
  return aggregate(records_, options_.bucket_ns);
}

std::vector<ThermalEvent> TelemetryCollector::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::size_t TelemetryCollector::record_count() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

}  // namespace edgetag::telemetry
