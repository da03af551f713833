#pragma once

#include <mutex>

namespace dgt {

// FFTW's planner is not thread-safe; plan creation/destruction must be
// serialized. Plan execution on distinct buffers is safe.
inline std::mutex& fftwPlannerMutex() {
  static std::mutex m;
  return m;
}

}  // namespace dgt
