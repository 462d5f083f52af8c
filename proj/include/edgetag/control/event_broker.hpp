#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace edgetag::control {

struct Event {
  std::uint64_t id = 0;
  std::string type;  // "prediction", "bucket", "thermal", "model", "run_ended"
  std::string data;  // JSON text

  // Server-sent-events wire form.
  std::string sse() const;
};

/// Fan-out of engine events to a bounded set of subscribers. publish()
/// never blocks: a subscriber whose buffer is full is disconnected.
class EventBroker {
 public:
  class Subscription {
   public:
    // Waits up to `timeout` for the next event; nullopt on timeout or once
    // disconnected (check connected()).
    std::optional<Event> next(std::chrono::milliseconds timeout);
    bool connected() const;
    std::uint64_t id() const { return id_; }

   private:
    friend class EventBroker;
    explicit Subscription(std::uint64_t id, std::size_t capacity) : id_(id), capacity_(capacity) {}

    const std::uint64_t id_;
    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Event> queue_;
    bool connected_ = true;
  };

  explicit EventBroker(std::size_t max_subscribers = 4, std::size_t buffer_capacity = 256);

  // nullptr when max_subscribers are already connected or the broker is closed.
  std::shared_ptr<Subscription> subscribe();
  void unsubscribe(const std::shared_ptr<Subscription>& subscription);
  void publish(const std::string& type, std::string data);
  // Disconnects every subscriber and refuses new ones.
  void close();

  std::size_t subscriber_count() const;
  std::uint64_t disconnected_slow() const;
  std::uint64_t published() const;
  std::size_t max_subscribers() const { return max_subscribers_; }

 private:
  static void disconnect(Subscription& s);

  const std::size_t max_subscribers_;
  const std::size_t buffer_capacity_;
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  std::uint64_t next_event_id_ = 1;
  std::uint64_t next_subscriber_id_ = 1;
  std::uint64_t disconnected_slow_ = 0;
  bool closed_ = false;
};

}  // namespace edgetag::control
