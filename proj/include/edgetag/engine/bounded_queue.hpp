#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <stop_token>

namespace edgetag::engine {

/// Multi-producer queue holding at most `capacity` items. A push into a full
/// queue evicts and returns the oldest item (freshness first).
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("queue capacity must be at least 1");
  }

  std::optional<T> push(T item) {
    std::optional<T> evicted;
    {
      std::lock_guard lock(mutex_);
      if (closed_) return item;
      if (items_.size() == capacity_) {
        evicted = std::move(items_.front());
        items_.pop_front();
      }
      items_.push_back(std::move(item));
      if (items_.size() > high_water_) high_water_ = items_.size();
    }
    cv_.notify_one();
    return evicted;
  }

  // Blocks until an item is available. Returns nullopt when stopped, when the
  // queue is closed and drained, or after wake(); callers re-check their state.
  std::optional<T> pop(std::stop_token stop) {
    std::unique_lock lock(mutex_);
    const auto seen = wakeups_;
    cv_.wait(lock, stop, [&] { return !items_.empty() || closed_ || wakeups_ != seen; });
    if (items_.empty() || stop.stop_requested()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  // Interrupts a blocked pop() without delivering an item.
  void wake() {
    {
      std::lock_guard lock(mutex_);
      ++wakeups_;
    }
    cv_.notify_all();
  }

  // Rejects further pushes; pop() drains what is left.
  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::size_t clear() {
    std::lock_guard lock(mutex_);
    const std::size_t n = items_.size();
    items_.clear();
    return n;
  }

  bool drained() const {
    std::lock_guard lock(mutex_);
    return closed_ && items_.empty();
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  std::size_t high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
  }
  std::size_t capacity() const { return capacity_; }

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable_any cv_;
  std::deque<T> items_;
  std::size_t high_water_ = 0;
  std::uint64_t wakeups_ = 0;
  bool closed_ = false;
};

}  // namespace edgetag::engine
