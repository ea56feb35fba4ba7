#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udseq/measure.hpp"
#include "udseq/product.hpp"
#include "udseq/rng.hpp"
#include "udseq/test_function.hpp"

namespace udseq::selftest {

// Seeded generators shared by the selftest command and the fuzz suites.

// Random metric via shortest-path closure of a symmetric draw in [lo, hi].
SpacePtr random_space(Rng& rng, int n, double lo, double hi,
                      const std::string& label);

// Probability measure with up to max_atoms atoms and small-integer
// rational weights.
DiscreteMeasure random_probability(Rng& rng, const SpacePtr& space, int max_atoms);

// Lower envelope of random cone functions, clamped to [-1, 1].
TestFunction random_lipschitz(Rng& rng, const SpacePtr& space);

// 1-Lipschitz map onto a quotient-style image space.
PointMap random_contraction(Rng& rng, const SpacePtr& from);

struct SelftestRow {
  std::string suite;
  int cases = 0;
  double worst = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct SelftestReport {
  std::uint64_t seed = 0;
  std::vector<SelftestRow> rows;
  bool pass = false;
};

SelftestReport run_selftest(std::uint64_t seed);

// Deterministic one-line-per-suite rendering.
std::string selftest_text(const SelftestReport& report);

}  // namespace udseq::selftest
