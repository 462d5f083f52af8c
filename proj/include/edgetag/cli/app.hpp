#pragma once

#include "edgetag/error.hpp"

namespace edgetag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Invalid inputs (config, manifest, graph, window/shape contract, missing
// files) map to kExitUsage; everything else to kExitFailure.
int exit_code_for(Errc code);

// `edge-tagger` entry point: run | bench | report | validate.
int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace edgetag::cli
