#include "udseq/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace udseq {

int worker_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("UDSEQ_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return std::min(n, 64);
      return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
  }();
  return cached;
}

}  // namespace udseq
