#include "edgetag/error.hpp"

namespace edgetag {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::config: return "config-error";
    case Errc::manifest_invalid: return "manifest-invalid";
    case Errc::device_unavailable: return "device-unavailable";
    case Errc::device_overrun: return "device-overrun";
    case Errc::file_missing: return "file-missing";
    case Errc::graph_invalid: return "graph-invalid";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::window_mismatch: return "config-inconsistent-with-window";
    case Errc::backend_failure: return "backend-execution-failure";
    case Errc::io: return "io-error";
  }
  return "unknown";
}

}  // namespace edgetag
