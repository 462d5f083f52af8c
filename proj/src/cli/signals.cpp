#include "edgetag/cli/signals.hpp"

#include <spdlog/spdlog.h>

#include <csignal>
#include <ctime>

#include <pthread.h>

namespace edgetag::cli {

namespace {

sigset_t shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

sigset_t g_previous;

}  // namespace

SignalGuard::SignalGuard() {
  const auto set = shutdown_signals();
  pthread_sigmask(SIG_BLOCK, &set, &g_previous);
  thread_ = std::thread([this, set] {
    const timespec tick{0, 100'000'000};
    while (!quit_) {
      const int sig = sigtimedwait(&set, nullptr, &tick);
      if (sig <= 0) continue;
      last_signal_ = sig;
      if (stop_.stop_requested()) {
        spdlog::warn("second {} received; still shutting down", sig == SIGINT ? "SIGINT" : "SIGTERM");
        continue;
      }
      spdlog::info("{} received; shutting down", sig == SIGINT ? "SIGINT" : "SIGTERM");
      stop_.request_stop();
    }
  });
}

SignalGuard::~SignalGuard() {
  quit_ = true;
  if (thread_.joinable()) thread_.join();
  pthread_sigmask(SIG_SETMASK, &g_previous, nullptr);
}

}  // namespace edgetag::cli
