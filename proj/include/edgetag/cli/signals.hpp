#pragma once

#include <atomic>
#include <stop_token>
#include <thread>

namespace edgetag::cli {

/// Blocks SIGINT/SIGTERM for every thread created afterwards and turns them
/// into a stop request on a dedicated thread. Construct before spawning
/// worker threads; the previous mask is restored on destruction.
class SignalGuard {
 public:
  SignalGuard();
  ~SignalGuard();
  SignalGuard(const SignalGuard&) = delete;
  SignalGuard& operator=(const SignalGuard&) = delete;

  std::stop_token token() const { return stop_.get_token(); }
  std::stop_source& source() { return stop_; }
  int last_signal() const { return last_signal_; }

 private:
  std::stop_source stop_;
  std::atomic<bool> quit_{false};
  std::atomic<int> last_signal_{0};
  std::thread thread_;
};

}  // namespace edgetag::cli
