#pragma once

#include <vector>

#include "udseq/metric_space.hpp"
#include "udseq/weight.hpp"

namespace udseq {

struct Atom {
  int point;
  Weight weight;
};

// Finitely-supported nonnegative measure: atoms sorted by point id, no
// duplicates. Immutable after construction. The default-constructed
// value is an empty placeholder with no space, only fit for assignment.
class DiscreteMeasure {
public:
  DiscreteMeasure() = default;

  static DiscreteMeasure probability(SpacePtr space, std::vector<Atom> atoms);
  static DiscreteMeasure nonnegative(SpacePtr space, std::vector<Atom> atoms);
  static DiscreteMeasure dirac(SpacePtr space, int point);
  static DiscreteMeasure zero(SpacePtr space);

  const SpacePtr& space() const { return space_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Weight& mass() const { return mass_; }
  bool probability_flagged() const { return probability_; }
  bool is_probability() const;

  Weight weight_at(int point) const;
  std::vector<int> support() const;  // points with positive weight
  int support_size() const;

  DiscreteMeasure scaled(const Weight& factor) const;
  DiscreteMeasure plus(const DiscreteMeasure& other) const;
  // Atoms whose point has mask[point] != 0.
  DiscreteMeasure restricted_to(const std::vector<char>& mask) const;
  DiscreteMeasure normalized() const;

  Weight mass_inside(const std::vector<char>& mask) const;
  Weight mass_outside(const std::vector<char>& mask) const;

  // Equality as measures: zero atoms ignored, weights compared exactly
  // when both sides are exact and by value otherwise.
  bool equal_measure(const DiscreteMeasure& other) const;

private:
  DiscreteMeasure(SpacePtr space, std::vector<Atom> atoms, bool probability);

  SpacePtr space_;
  std::vector<Atom> atoms_;
  Weight mass_;
  bool probability_ = false;
};

bool same_space(const DiscreteMeasure& a, const DiscreteMeasure& b);

// mask[p] = 1 for p in points.
std::vector<char> point_mask(const MetricSpace& space, const std::vector<int>& points);

// Ordered point ids; repetition allowed.
class PointSequence {
public:
  PointSequence(SpacePtr space, std::vector<int> ids);

  const SpacePtr& space() const { return space_; }
  const std::vector<int>& ids() const { return ids_; }
  int length() const { return static_cast<int>(ids_.size()); }

private:
  SpacePtr space_;
  std::vector<int> ids_;
};

// Probability measure giving each point its frequency among the first n
// entries over n; weights are exact rationals.
DiscreteMeasure empirical(const PointSequence& seq, int n);

}  // namespace udseq
