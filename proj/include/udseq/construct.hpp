#pragma once

#include <vector>

#include "udseq/kr.hpp"
#include "udseq/measure.hpp"

namespace udseq {

// Length-n sequence whose atom counts follow largest-remainder
// apportionment of n*weight_i (ties to the lowest index), interleaved by
// largest current deficit so every prefix stays within 1 of
// proportionality per atom.
PointSequence quota_sequence(const DiscreteMeasure& target, int n);

// The empirical measure of quota_sequence(target, n) at horizon n,
// computed from the largest-remainder totals alone.
DiscreteMeasure quota_measure(const DiscreteMeasure& target, int n);

// Appends `steps` points to the prefix; each appended point minimizes
// the transport distance of the extended empirical measure to the
// target over the target's support, ties to the lowest point index.
PointSequence greedy_extend(const DiscreteMeasure& target,
                            const PointSequence& prefix, int steps);

// Concatenated quota blocks, one per approximating measure.
PointSequence measures_to_sequence(const std::vector<DiscreteMeasure>& approx,
                                   const std::vector<int>& block_lengths);

// b_1 = 1, b_k = k * (b_1 + ... + b_{k-1}): each block dominates the
// prefix before it.
std::vector<int> default_block_lengths(int count);

struct UdCertificate {
  DiscreteMeasure target;
  PointSequence sequence;
  int horizon = 0;  // last checkpoint
  std::vector<int> checkpoints;
  std::vector<double> distances;
  double tolerance = 0.0;
  // pass iff the final distance is within tolerance and the checkpoint
  // distances are non-increasing after their maximum.
  bool pass = false;
};

UdCertificate verify_ud(const DiscreteMeasure& target, const PointSequence& seq,
                        std::vector<int> checkpoints, double tolerance);

}  // namespace udseq
