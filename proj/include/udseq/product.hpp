#pragma once

#include <memory>
#include <vector>

#include "udseq/glue.hpp"
#include "udseq/kr.hpp"
#include "udseq/measure.hpp"
#include "udseq/test_function.hpp"

namespace udseq {

class Kernel;
using KernelPtr = std::shared_ptr<const Kernel>;

// Total map from domain points to probability measures on the codomain,
// together with an increasing chain K_1 c K_2 c ... of finite subsets on
// which the kernel is declared continuous. Against a marginal nu the
// chain must satisfy nu(K_n) > 1 - 2^-n for every materialized n.
class Kernel {
public:
  static KernelPtr create(SpacePtr domain, SpacePtr codomain,
                          std::vector<DiscreteMeasure> map,
                          std::vector<std::vector<int>> pieces);
  // Builds the chain from the marginal by greedy mass accumulation,
  // extending until a piece carries all of the marginal's mass.
  static KernelPtr with_pieces_from(SpacePtr domain, SpacePtr codomain,
                                    std::vector<DiscreteMeasure> map,
                                    const DiscreteMeasure& marginal);

  const SpacePtr& domain() const { return domain_; }
  const SpacePtr& codomain() const { return codomain_; }
  const DiscreteMeasure& at(int x) const;
  int piece_count() const { return static_cast<int>(pieces_.size()); }
  const std::vector<int>& piece(int n) const;  // 1-based, clamped at the last
  // Lipschitz-style continuity modulus recorded per piece; -1 when the
  // piece was too large to scan.
  double continuity_modulus(int n) const;

  // nu(K_n) > 1 - 2^-n for all materialized n; throws InputError.
  void check_mass_schedule(const DiscreteMeasure& marginal) const;

private:
  Kernel() = default;
  SpacePtr domain_, codomain_;
  std::vector<DiscreteMeasure> map_;
  std::vector<std::vector<int>> pieces_;
  std::vector<double> moduli_;
};

// Total kernel equal to the base on K_n and defined everywhere by
// nearest-point extension (ties to the lowest index).
struct ExtendedKernel {
  KernelPtr base;
  int level = 0;
  std::vector<int> anchors;  // anchor point in K_n per domain point

  const DiscreteMeasure& at(int x) const { return base->at(anchors[x]); }
  int anchor(int x) const { return anchors[x]; }
};

ExtendedKernel extend_kernel(const KernelPtr& kernel, int n);

// Greedy ball cover of the kernel's image in transport distance: sweep
// in index order, open a new cell when a value is at least 2^-(n+1) from
// every center, attach to the nearest center otherwise. Representatives
// are the smallest quota discretizations within 2^-n of their center.
struct KernelPartition {
  int level = 0;
  std::vector<std::vector<int>> cells;
  std::vector<int> centers;
  std::vector<DiscreteMeasure> representatives;
  std::vector<int> cell_index;      // per domain point
  double cell_diameter_sup = 0.0;   // recomputed; < 2^-n
  double representative_gap_sup = 0.0;  // recomputed; <= 2^(1-n)
};

KernelPartition build_partition(const ExtendedKernel& xi, int n);

// Smallest m_n >= n whose leakage out of the dilated pieces is at most
// 2^-n: sum over i < n of nu_{i,m_n}(X \ U_{n,i}) with U_{n,i} the
// r-dilation of K_i (suffix-intersected to enforce nesting).
struct ScheduleEntry {
  int level = 0;
  int m_n = 0;
  std::vector<std::vector<int>> neighborhoods;  // U_{n,i}, i = 1..level-1
  Weight leakage;
};

ScheduleEntry select_schedule(const PieceDecomposition& marginal_approx, int n,
                              double dilation_r);

double default_dilation_radius(const MetricSpace& space);

// Sum over atoms (x, w) of nu and atoms (y, v) of the representative at
// x's cell of atoms ((x,y), w*v); the X-projection equals nu exactly.
DiscreteMeasure product_measure(const DiscreteMeasure& nu,
                                const KernelPartition& partition,
                                const SpacePtr& product_space);

DiscreteMeasure project_to_x(const DiscreteMeasure& on_product);
DiscreteMeasure project_to_y(const DiscreteMeasure& on_product);

struct ProductLevel {
  int level = 0;
  DiscreteMeasure measure;  // normalized to a probability measure
  Weight raw_mass;          // mass before normalization, = nu(K_{n-1})
};

struct ProductConvergenceReport {
  double eps = 0.0;
  double bound = 0.0;       // 6 * eps
  int start_level = 0;      // first level the bound is claimed from
  double worst_error = 0.0; // over test functions and levels >= start
  double worst_ratio = 0.0; // worst_error / bound
  bool pass = false;
  std::vector<std::pair<int, double>> level_errors;  // per built level
};

ProductConvergenceReport verify_product_convergence(
    const DiscreteMeasure& joint_target, const std::vector<ProductLevel>& levels,
    const std::vector<ProductTestFunction>& test_functions, double eps);

// Point map with a recorded Lipschitz constant, validated on construction.
class PointMap {
public:
  PointMap(SpacePtr from, SpacePtr to, std::vector<int> image, double lipschitz);
  const SpacePtr& from() const { return from_; }
  const SpacePtr& to() const { return to_; }
  double lipschitz() const { return lipschitz_; }
  int at(int p) const;  // DomainError when undefined (-1 entries)

private:
  SpacePtr from_, to_;
  std::vector<int> image_;
  double lipschitz_;
};

// Image measure; collided images merge by weight addition.
DiscreteMeasure pushforward(const DiscreteMeasure& m, const PointMap& map);

struct ProductPipelineOptions {
  int levels = 6;            // build n = 2..levels
  double eps = 0.25;
  double dilation = -1.0;    // < 0: half the minimum positive distance
  int marginal_horizon = 0;  // 0: levels + 8
  std::vector<ProductTestFunction> extra_test_functions;
};

struct ProductLevelRow {
  int level = 0;
  int m_n = 0;
  double leakage = 0.0;
  double kernel_gap = 0.0;      // sup_x d(xi_n^x, representative)
  double marginal_error = 0.0;  // max over psi of |I(psi, nu_n) - I(psi, nu)|
  double product_error = 0.0;   // max over f of |I(f, mu_n) - I(f, mu)|
};

struct ProductPipelineResult {
  SpacePtr product_space;
  DiscreteMeasure joint;  // exact target assembled from marginal and kernel
  std::vector<ProductLevel> levels;
  std::vector<DiscreteMeasure> marginal_sums;  // nu_n per level, unnormalized
  std::vector<ScheduleEntry> schedule;
  std::vector<KernelPartition> partitions;
  std::vector<ProductLevelRow> rows;
  ProductConvergenceReport report;
  double worst_trimming_margin = 0.0;  // max of tail(m) - 2^-m over n, m < n
};

ProductPipelineResult run_product_pipeline(const DiscreteMeasure& marginal,
                                           const KernelPtr& kernel,
                                           const ProductPipelineOptions& options);

}  // namespace udseq
