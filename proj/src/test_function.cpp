#include "udseq/test_function.hpp"

#include <algorithm>
#include <cmath>

#include "udseq/errors.hpp"

namespace udseq {

namespace {

void check_bounded(const std::vector<double>& v, double tol, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x) || std::abs(x) > 1.0 + tol)
      throw DomainError(std::string(what) + " exceeds the bound |f| <= 1");
  }
}

void check_lipschitz(const MetricSpace& s, const std::vector<double>& v, double tol,
                     const char* what) {
  const int n = s.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(v[i] - v[j]) > s.dist(i, j) + tol)
        throw DomainError(std::string(what) + " is not 1-Lipschitz between points " +
                          std::to_string(i) + " and " + std::to_string(j));
    }
  }
}

}  // namespace

TestFunction::TestFunction(SpacePtr space, std::vector<double> values, double tol)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw ShapeError("test function requires a space");
  if (static_cast<int>(values_.size()) != space_->size())
    throw ShapeError("test function values do not cover the space");
  check_bounded(values_, tol, "test function");
  check_lipschitz(*space_, values_, tol, "test function");
}

TestFunction TestFunction::constant(SpacePtr space, double c) {
  if (!space) throw ShapeError("test function requires a space");
  return TestFunction(space, std::vector<double>(space->size(), c));
}

TestFunction TestFunction::distance_cone(SpacePtr space, int center) {
  if (!space) throw ShapeError("test function requires a space");
  std::vector<double> v(space->size());
  for (int i = 0; i < space->size(); ++i)
    v[i] = std::clamp(1.0 - space->dist(i, center), -1.0, 1.0);
  return TestFunction(space, std::move(v));
}

double integrate(const DiscreteMeasure& m, const TestFunction& f) {
  if (!same_space(m.space(), f.space()))
    throw DomainError("test function is undefined on the measure's space");
  double s = 0.0;
  for (const auto& a : m.atoms()) s += a.weight.value() * f(a.point);
  return s;
}

ProductTestFunction::ProductTestFunction(SpacePtr product_space,
                                         std::vector<double> psi,
                                         std::vector<double> phi, double tol)
    : space_(std::move(product_space)), psi_(std::move(psi)), phi_(std::move(phi)) {
  if (!space_ || !space_->is_product())
    throw ShapeError("product test function requires a product space");
  const auto& X = space_->factor_x();
  const auto& Y = space_->factor_y();
  if (static_cast<int>(psi_.size()) != X->size() ||
      static_cast<int>(phi_.size()) != Y->size())
    throw ShapeError("factor value lists do not cover the factors");
  check_bounded(psi_, tol, "first factor");
  check_bounded(phi_, tol, "second factor");
  check_lipschitz(*Y, phi_, tol, "second factor");
}

double ProductTestFunction::integrate_product(const DiscreteMeasure& m) const {
  if (!same_space(m.space(), space_))
    throw DomainError("product test function is undefined on the measure's space");
  double s = 0.0;
  for (const auto& a : m.atoms()) {
    auto [ix, iy] = space_->pair_of(a.point);
    s += a.weight.value() * eval(ix, iy);
  }
  return s;
}

double ProductTestFunction::integrate_marginal(const DiscreteMeasure& on_x) const {
  if (!same_space(on_x.space(), space_->factor_x()))
    throw DomainError("marginal factor is undefined on the measure's space");
  double s = 0.0;
  for (const auto& a : on_x.atoms()) s += a.weight.value() * psi_[a.point];
  return s;
}

std::vector<ProductTestFunction> default_product_test_family(const SpacePtr& ps) {
  if (!ps || !ps->is_product())
    throw ShapeError("default test family requires a product space");
  const auto& X = ps->factor_x();
  const auto& Y = ps->factor_y();
  std::vector<std::vector<double>> psis, phis;
  psis.push_back(std::vector<double>(X->size(), 1.0));
  for (int c = 0; c < X->size(); ++c) {
    std::vector<double> v(X->size());
    for (int i = 0; i < X->size(); ++i)
      v[i] = std::clamp(1.0 - X->dist(i, c), -1.0, 1.0);
    psis.push_back(std::move(v));
  }
  phis.push_back(std::vector<double>(Y->size(), 1.0));
  for (int c = 0; c < Y->size(); ++c) {
    std::vector<double> v(Y->size());
    for (int i = 0; i < Y->size(); ++i)
      v[i] = std::clamp(1.0 - Y->dist(i, c), -1.0, 1.0);
    phis.push_back(std::move(v));
  }
  std::vector<ProductTestFunction> out;
  for (const auto& psi : psis)
    for (const auto& phi : phis) out.emplace_back(ps, psi, phi);
  return out;
}

}  // namespace udseq
