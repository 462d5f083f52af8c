#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgetag {

enum class Errc {
  config,
  manifest_invalid,
  device_unavailable,
  device_overrun,
  file_missing,
  graph_invalid,
  shape_mismatch,
  window_mismatch,
  backend_failure,
  io,
};

std::string_view to_string(Errc code) noexcept;

/// Error raised by every edgetag module. The code identifies the contract
/// that failed; the message names the offending value.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace edgetag
