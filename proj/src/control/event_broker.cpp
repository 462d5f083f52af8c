#include "edgetag/control/event_broker.hpp"

#include <algorithm>

namespace edgetag::control {

std::string Event::sse() const {
  std::string out = "id: " + std::to_string(id) + "\nevent: " + type + "\n";
  std::size_t pos = 0;
  while (pos <= data.size()) {
    const auto nl = data.find('\n', pos);
    out += "data: " + data.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos) + "\n";
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out + "\n";
}

std::optional<Event> EventBroker::Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || !connected_; });
  if (!connected_ || queue_.empty()) return std::nullopt;
  Event e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

bool EventBroker::Subscription::connected() const {
  std::lock_guard lock(mutex_);
  return connected_;
}

EventBroker::EventBroker(std::size_t max_subscribers, std::size_t buffer_capacity)
    : max_subscribers_(max_subscribers), buffer_capacity_(std::max<std::size_t>(1, buffer_capacity)) {}

std::shared_ptr<EventBroker::Subscription> EventBroker::subscribe() {
  std::lock_guard lock(mutex_);
  if (closed_ || subscribers_.size() >= max_subscribers_) return nullptr;
  std::shared_ptr<Subscription> s(new Subscription(next_subscriber_id_++, buffer_capacity_));
  subscribers_.push_back(s);
  return s;
}

void EventBroker::unsubscribe(const std::shared_ptr<Subscription>& subscription) {
  if (!subscription) return;
  {
    std::lock_guard lock(mutex_);
    std::erase(subscribers_, subscription);
  }
  disconnect(*subscription);
}

void EventBroker::disconnect(Subscription& s) {
  {
    std::lock_guard lock(s.mutex_);
    s.connected_ = false;
    s.queue_.clear();
  }
  s.cv_.notify_all();
}

void EventBroker::publish(const std::string& type, std::string data) {
  std::vector<std::shared_ptr<Subscription>> dropped;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    const Event event{next_event_id_++, type, std::move(data)};
    for (const auto& s : subscribers_) {
      bool overflow = false;
      {
        std::lock_guard slock(s->mutex_);
        if (s->queue_.size() >= s->capacity_)
          overflow = true;
        else
          s->queue_.push_back(event);
      }
      if (overflow)
        dropped.push_back(s);
      else
        s->cv_.notify_one();
    }
    for (const auto& s : dropped) std::erase(subscribers_, s);
    disconnected_slow_ += dropped.size();
  }
  for (const auto& s : dropped) disconnect(*s);
}

void EventBroker::close() {
  std::vector<std::shared_ptr<Subscription>> all;
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
    all.swap(subscribers_);
  }
  for (const auto& s : all) disconnect(*s);
}

std::size_t EventBroker::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

std::uint64_t EventBroker::disconnected_slow() const {
  std::lock_guard lock(mutex_);
  return disconnected_slow_;
}

std::uint64_t EventBroker::published() const {
  std::lock_guard lock(mutex_);
  return next_event_id_ - 1;
}

}  // namespace edgetag::control
