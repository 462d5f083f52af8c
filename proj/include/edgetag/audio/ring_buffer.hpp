#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace edgetag::audio {

// Fixed-capacity FIFO of samples. Not thread-safe.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity) : data_(capacity) {}

  std::size_t capacity() const { return data_.size(); }
  std::size_t size() const { return size_; }
  std::size_t free_space() const { return data_.size() - size_; }
  void clear() { head_ = size_ = 0; }

  void push(std::span<const T> values) {
    if (values.size() > free_space()) throw std::length_error("ring buffer overflow");
    std::size_t tail = (head_ + size_) % data_.size();
    std::size_t first = std::min(values.size(), data_.size() - tail);
    std::copy_n(values.begin(), first, data_.begin() + static_cast<std::ptrdiff_t>(tail));
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(first), values.end(), data_.begin());
    size_ += values.size();
  }

  // Copies the oldest `count` values into `out` without consuming them.
  void peek(std::size_t count, T* out) const {
    if (count > size_) throw std::out_of_range("ring buffer underflow");
    std::size_t first = std::min(count, data_.size() - head_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(head_), first, out);
    std::copy_n(data_.begin(), count - first, out + first);
  }

  void discard(std::size_t count) {
    if (count > size_) throw std::out_of_range("ring buffer underflow");
    head_ = (head_ + count) % data_.size();
    size_ -= count;
  }

 private:
  std::vector<T> data_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace edgetag::audio
