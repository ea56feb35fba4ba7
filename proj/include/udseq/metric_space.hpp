#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace udseq {

struct MetricViolation {
  enum class Kind { NotFinite, Negative, SelfDistance, Symmetry, Triangle };
  Kind kind;
  std::vector<int> points;  // offending point indices
  double amount;            // size of the violation
  std::string describe() const;
};

struct ValidationReport {
  std::vector<MetricViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary(std::size_t max_lines = 8) const;
};

class MetricSpace;
using SpacePtr = std::shared_ptr<const MetricSpace>;

// Finite indexed point set with a distance function. Immutable after
// construction; point identifiers are dense indices into the point list.
class MetricSpace {
public:
  static SpacePtr from_matrix(std::string label, std::vector<std::string> names,
                              std::vector<std::vector<double>> dist);
  static SpacePtr euclidean(std::string label,
                            std::vector<std::vector<double>> coords);
  // X x Y with the sum metric d((x,y),(x',y')) = dX(x,x') + dY(y,y').
  static SpacePtr product_of(SpacePtr x, SpacePtr y);

  int size() const { return size_; }
  const std::string& label() const { return label_; }
  std::string point_name(int i) const;
  double dist(int i, int j) const;

  bool has_coords() const { return coords_.has_value(); }
  const std::vector<std::vector<double>>& coords() const { return *coords_; }
  bool has_matrix() const { return dist_.has_value(); }
  const std::vector<std::vector<double>>& matrix() const { return *dist_; }
  std::vector<std::vector<double>> materialize_matrix() const;

  bool is_product() const { return factor_x_ != nullptr; }
  const SpacePtr& factor_x() const { return factor_x_; }
  const SpacePtr& factor_y() const { return factor_y_; }
  int pair_index(int ix, int iy) const;
  std::pair<int, int> pair_of(int index) const;

  // Smallest positive pairwise distance; 0 if none exists.
  double min_positive_distance() const;

  // Metric-axiom check, run once and cached. Violations are report
  // entries, not failures.
  const ValidationReport& validate() const;
  // Throws InputError when validate() finds violations.
  void require_valid() const;

  bool same_as(const MetricSpace& other) const;

private:
  MetricSpace() = default;

  int size_ = 0;
  std::string label_;
  std::vector<std::string> names_;
  std::optional<std::vector<std::vector<double>>> coords_;
  std::optional<std::vector<std::vector<double>>> dist_;
  SpacePtr factor_x_, factor_y_;

  mutable std::once_flag validate_once_;
  mutable std::shared_ptr<const ValidationReport> report_;
};

bool same_space(const SpacePtr& a, const SpacePtr& b);

}  // namespace udseq
