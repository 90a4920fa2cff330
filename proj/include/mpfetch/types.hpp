#pragma once

#include <cstdint>

namespace mpfetch {

using Bytes = std::uint64_t;

// Milliseconds. Virtual time in simulations, elapsed wall-clock time since
// session start in live runs.
using TimeMs = double;

inline constexpr Bytes kKiB = 1024;
inline constexpr Bytes kMiB = 1024 * 1024;

// Rates are bytes per millisecond internally; convert for user-facing output.
inline double bytes_per_ms_to_mbps(double bytes_per_ms) {
  return bytes_per_ms * 0.008;
}

}  // namespace mpfetch
