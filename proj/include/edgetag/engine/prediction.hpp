#pragma once

#include "edgetag/inference/model.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

namespace edgetag::engine {

/// Top-k result for one analysis window. inference_time_ms is the backend
/// time; total_time_ms runs from window-ready to prediction-ready.
struct Prediction {
  std::string model_id;
  std::int64_t window_index = 0;
  std::int64_t window_start_ns = 0;  // wall clock
  std::vector<inference::LabeledScore> top_k;
  double recording_time_s = 0.0;  // stream seconds since the previous prediction
  double inference_time_ms = 0.0;
  double total_time_ms = 0.0;
};

nlohmann::json to_json(const Prediction& prediction);
Prediction prediction_from_json(const nlohmann::json& doc);

struct OverrunCounts {
  std::int64_t windows_dropped = 0;
  std::int64_t backend_failures = 0;
  std::int64_t stream_gaps = 0;
  std::int64_t write_failures = 0;

  bool operator==(const OverrunCounts&) const = default;
};

nlohmann::json to_json(const OverrunCounts& counts);

/// Lock-free counters shared by the engine's execution contexts; each only
/// ever increases within a run.
class OverrunCounter {
 public:
  void window_dropped(std::int64_t n = 1) { windows_dropped_ += n; }
  void backend_failure() { ++backend_failures_; }
  void stream_gaps(std::int64_t total) {
    auto cur = stream_gaps_.load();
    while (total > cur && !stream_gaps_.compare_exchange_weak(cur, total)) {
    }
  }
  void write_failure() { ++write_failures_; }
  OverrunCounts snapshot() const {
    return {windows_dropped_.load(), backend_failures_.load(), stream_gaps_.load(), write_failures_.load()};
  }

 private:
  std::atomic<std::int64_t> windows_dropped_{0};
  std::atomic<std::int64_t> backend_failures_{0};
  std::atomic<std::int64_t> stream_gaps_{0};
  std::atomic<std::int64_t> write_failures_{0};
};

}  // namespace edgetag::engine
