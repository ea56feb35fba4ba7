#include "udseq/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "udseq/errors.hpp"

namespace udseq {

std::string MetricViolation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::NotFinite:
      os << "non-finite distance";
      break;
    case Kind::Negative:
      os << "negative distance";
      break;
    case Kind::SelfDistance:
      os << "nonzero self-distance";
      break;
    case Kind::Symmetry:
      os << "asymmetric distance";
      break;
    case Kind::Triangle:
      os << "triangle inequality violated";
      break;
  }
  os << " at (";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) os << ",";
    os << points[i];
  }
  os << "), amount " << amount;
  return os.str();
}

std::string ValidationReport::summary(std::size_t max_lines) const {
  std::ostringstream os;
  os << violations.size() << " metric axiom violation(s)";
  for (std::size_t i = 0; i < violations.size() && i < max_lines; ++i) {
    os << "\n  " << violations[i].describe();
  }
  if (violations.size() > max_lines) os << "\n  ...";
  return os.str();
}

SpacePtr MetricSpace::from_matrix(std::string label,
                                  std::vector<std::string> names,
                                  std::vector<std::vector<double>> dist) {
  const int n = static_cast<int>(dist.size());
  for (const auto& row : dist) {
    if (static_cast<int>(row.size()) != n)
      throw ShapeError("distance matrix is not square");
  }
  if (!names.empty() && static_cast<int>(names.size()) != n)
    throw ShapeError("point name list does not match matrix size");
  auto s = std::shared_ptr<MetricSpace>(new MetricSpace());
  s->size_ = n;
  s->label_ = std::move(label);
  s->names_ = std::move(names);
  s->dist_ = std::move(dist);
  return s;
}

SpacePtr MetricSpace::euclidean(std::string label,
                                std::vector<std::vector<double>> coords) {
  const int n = static_cast<int>(coords.size());
  const std::size_t dim = n > 0 ? coords[0].size() : 0;
  for (const auto& c : coords) {
    if (c.size() != dim) throw ShapeError("coordinate rows have mixed dimensions");
  }
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = coords[i][k] - coords[j][k];
        s += d * d;
      }
      m[i][j] = m[j][i] = std::sqrt(s);
    }
  }
  auto s = std::shared_ptr<MetricSpace>(new MetricSpace());
  s->size_ = n;
  s->label_ = std::move(label);
  s->coords_ = std::move(coords);
  s->dist_ = std::move(m);
  return s;
}

SpacePtr MetricSpace::product_of(SpacePtr x, SpacePtr y) {
  if (!x || !y) throw ShapeError("product of null spaces");
  auto s = std::shared_ptr<MetricSpace>(new MetricSpace());
  s->size_ = x->size() * y->size();
  s->label_ = x->label() + "*" + y->label();
  s->factor_x_ = std::move(x);
  s->factor_y_ = std::move(y);
  return s;
}

std::string MetricSpace::point_name(int i) const {
  if (i < 0 || i >= size_) throw RangeError("point index out of range");
  if (is_product()) {
    auto [ix, iy] = pair_of(i);
    return "(" + factor_x_->point_name(ix) + "," + factor_y_->point_name(iy) + ")";
  }
  if (!names_.empty()) return names_[i];
  return std::to_string(i);
}

double MetricSpace::dist(int i, int j) const {
  if (i < 0 || j < 0 || i >= size_ || j >= size_)
    throw RangeError("point index out of range");
  if (dist_) return (*dist_)[i][j];
  auto [ix, iy] = pair_of(i);
  auto [jx, jy] = pair_of(j);
  return factor_x_->dist(ix, jx) + factor_y_->dist(iy, jy);
}

std::vector<std::vector<double>> MetricSpace::materialize_matrix() const {
  if (dist_) return *dist_;
  std::vector<std::vector<double>> m(size_, std::vector<double>(size_, 0.0));
  for (int i = 0; i < size_; ++i)
    for (int j = 0; j < size_; ++j) m[i][j] = dist(i, j);
  return m;
}

int MetricSpace::pair_index(int ix, int iy) const {
  if (!is_product()) throw DomainError("pair_index on a non-product space");
  if (ix < 0 || ix >= factor_x_->size() || iy < 0 || iy >= factor_y_->size())
    throw RangeError("factor index out of range");
  return ix * factor_y_->size() + iy;
}

std::pair<int, int> MetricSpace::pair_of(int index) const {
  if (!is_product()) throw DomainError("pair_of on a non-product space");
  if (index < 0 || index >= size_) throw RangeError("point index out of range");
  const int ny = factor_y_->size();
  return {index / ny, index % ny};
}

double MetricSpace::min_positive_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size_; ++i) {
    for (int j = i + 1; j < size_; ++j) {
      const double d = dist(i, j);
      if (d > 0.0 && d < best) best = d;
    }
  }
  return std::isfinite(best) ? best : 0.0;
}

namespace {

constexpr double kTriangleTol = 1e-9;

void scan_axioms(const MetricSpace& s, ValidationReport& rep) {
  const int n = s.size();
  for (int i = 0; i < n; ++i) {
    const double dii = s.dist(i, i);
    if (dii != 0.0)
      rep.violations.push_back(
          {MetricViolation::Kind::SelfDistance, {i}, dii});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dij = s.dist(i, j);
      const double dji = s.dist(j, i);
      if (!std::isfinite(dij))
        rep.violations.push_back({MetricViolation::Kind::NotFinite, {i, j}, dij});
      else if (dij < 0.0)
        rep.violations.push_back({MetricViolation::Kind::Negative, {i, j}, dij});
      if (dij != dji)
        rep.violations.push_back(
            {MetricViolation::Kind::Symmetry, {i, j}, std::abs(dij - dji)});
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = s.dist(i, j);
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double via = s.dist(i, k) + s.dist(k, j);
        if (dij > via + kTriangleTol)
          rep.violations.push_back(
              {MetricViolation::Kind::Triangle, {i, k, j}, dij - via});
      }
    }
  }
}

}  // namespace

const ValidationReport& MetricSpace::validate() const {
  std::call_once(validate_once_, [this] {
    auto rep = std::make_shared<ValidationReport>();
    // Large products: the sum metric of valid metrics is valid, so check
    // the factors instead of the O(n^3) scan.
    if (is_product() && size_ > 512) {
      const auto& rx = factor_x_->validate();
      const auto& ry = factor_y_->validate();
      rep->violations.insert(rep->violations.end(), rx.violations.begin(),
                             rx.violations.end());
      rep->violations.insert(rep->violations.end(), ry.violations.begin(),
                             ry.violations.end());
    } else {
      scan_axioms(*this, *rep);
    }
    report_ = rep;
  });
  return *report_;
}

void MetricSpace::require_valid() const {
  const auto& rep = validate();
  if (!rep.ok())
    throw InputError("space '" + label_ + "': " + rep.summary());
}

bool MetricSpace::same_as(const MetricSpace& other) const {
  if (this == &other) return true;
  if (size_ != other.size_ || label_ != other.label_) return false;
  for (int i = 0; i < size_; ++i)
    for (int j = 0; j < size_; ++j)
      if (dist(i, j) != other.dist(i, j)) return false;
  return true;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->same_as(*b);
}

}  // namespace udseq
