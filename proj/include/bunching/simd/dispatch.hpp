#pragma once

#include <string_view>

namespace bunching::simd {

//! Instruction-set variants of the hot reductions.
enum class Backend
{
  scalar,
  avx2
};

std::string_view to_string(Backend backend);

//! Whether this build and this CPU can run the backend.
bool backend_available(Backend backend);

//! Backend used by the reductions. Chosen on first use from the CPU, unless
//! the environment variable BUNCHING_SIMD is set to "scalar" or "avx2".
Backend active_backend();

//! Forces a backend (throws an input error if it is unavailable).
void set_backend(Backend backend);

//! Drops any forced choice and re-runs detection.
void reset_backend();

} // namespace bunching::simd
