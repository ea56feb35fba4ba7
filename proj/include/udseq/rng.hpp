#pragma once

#include <cstdint>
#include <random>

namespace udseq {

// Seed-derived randomness for fuzz suites. Only raw mt19937_64 output is
// used (std distributions are implementation-defined), so the same seed
// yields the same stream everywhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(gen_() % span);
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace udseq
