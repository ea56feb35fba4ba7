#pragma once

#include <vector>

#include "udseq/measure.hpp"
#include "udseq/metric_space.hpp"

namespace udseq {

// Distances are truncated at 2 in every transport cost: for probability
// measures the optimal cost under min(d, 2) equals the supremum of
// integral differences over functions with |f| <= 1 and Lipschitz
// constant 1 (the primal/dual/oracle agreement tests pin this down).
constexpr double kKrCostCeiling = 2.0;

inline double truncated_cost(const MetricSpace& s, int i, int j) {
  const double d = s.dist(i, j);
  return d < kKrCostCeiling ? d : kKrCostCeiling;
}

struct TransportFlow {
  int from;  // source point id
  int to;    // target point id
  double mass;
};

struct TransportPlan {
  DiscreteMeasure source;
  DiscreteMeasure target;
  std::vector<TransportFlow> flows;
  double cost = 0.0;

  // Largest row/column marginal violation (test aid).
  double marginal_gap() const;
};

struct KrResult {
  double value = 0.0;
  TransportPlan plan;
  // Optimal dual pair for the truncated-cost transport problem:
  // alpha[i] + beta[j] <= cost(source_points[i], target_points[j]),
  // with equality on every positive flow.
  std::vector<int> source_points, target_points;
  std::vector<double> alpha, beta;
};

// Optimal transport between probability measures on one space under the
// truncated ground cost, solved by successive shortest augmenting paths
// on the bipartite support graph.
KrResult kr_distance(const DiscreteMeasure& p, const DiscreteMeasure& q);

struct DualPotential {
  SpacePtr space;
  std::vector<int> points;    // union of the two supports, ascending
  std::vector<double> values;

  double value_at(int point) const;
  // Worst violation of |f| <= 1 or of 1-Lipschitz-ness over stored pairs.
  double feasibility_gap() const;
};

struct KrDualResult {
  double value = 0.0;
  DualPotential potential;
};

// Maximizes integrate(p,f) - integrate(q,f) over potentials with
// |f| <= 1 and Lip(f) <= 1 by a dense LP over the support points.
KrDualResult kr_dual(const DiscreteMeasure& p, const DiscreteMeasure& q,
                     int size_cap = 64);

// Exhaustive vertex enumeration of the transport polytope in exact
// arithmetic; combined support of at most 8 atoms. Test oracle.
double kr_oracle(const DiscreteMeasure& p, const DiscreteMeasure& q);

}  // namespace udseq
