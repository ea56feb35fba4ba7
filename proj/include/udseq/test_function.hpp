#pragma once

#include <vector>

#include "udseq/measure.hpp"
#include "udseq/metric_space.hpp"

namespace udseq {

// Function on a space with certified bound |f| <= 1 and Lipschitz
// constant <= 1, both checked on construction.
class TestFunction {
public:
  TestFunction(SpacePtr space, std::vector<double> values, double tol = 1e-9);

  static TestFunction constant(SpacePtr space, double c);
  // clamp(1 - d(x, center), -1, 1): a 1-Lipschitz bump around the center.
  static TestFunction distance_cone(SpacePtr space, int center);

  double operator()(int point) const { return values_[point]; }
  const SpacePtr& space() const { return space_; }
  const std::vector<double>& values() const { return values_; }

private:
  SpacePtr space_;
  std::vector<double> values_;
};

// Sum of weight * f(point) over atoms.
double integrate(const DiscreteMeasure& m, const TestFunction& f);

// psi(x) * phi(y) on a product space: |psi| <= 1 on X, |phi| <= 1 and
// Lip(phi) <= 1 on Y.
class ProductTestFunction {
public:
  ProductTestFunction(SpacePtr product_space, std::vector<double> psi,
                      std::vector<double> phi, double tol = 1e-9);

  const SpacePtr& space() const { return space_; }
  double eval(int ix, int iy) const { return psi_[ix] * phi_[iy]; }
  const std::vector<double>& psi() const { return psi_; }
  const std::vector<double>& phi() const { return phi_; }

  double integrate_product(const DiscreteMeasure& on_product) const;
  // Integral of psi alone against a measure on the X factor.
  double integrate_marginal(const DiscreteMeasure& on_x) const;

private:
  SpacePtr space_;
  std::vector<double> psi_, phi_;
};

// Constants plus distance cones in each factor, combined pairwise.
std::vector<ProductTestFunction> default_product_test_family(const SpacePtr& product_space);

}  // namespace udseq
