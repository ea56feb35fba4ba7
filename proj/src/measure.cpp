#include "udseq/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "udseq/errors.hpp"

namespace udseq {

namespace {
constexpr double kMassTol = 1e-12;
}

DiscreteMeasure::DiscreteMeasure(SpacePtr space, std::vector<Atom> atoms,
                                 bool probability)
    : space_(std::move(space)), atoms_(std::move(atoms)), probability_(probability) {
  if (!space_) throw ShapeError("measure requires a space");
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.point < b.point; });
  Weight m;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    if (a.point < 0 || a.point >= space_->size())
      throw RangeError("atom point " + std::to_string(a.point) +
                       " outside space of size " + std::to_string(space_->size()));
    if (a.weight.negative())
      throw MassError("atom weight is negative at point " + std::to_string(a.point));
    if (i > 0 && atoms_[i - 1].point == a.point)
      throw InputError("duplicate atom at point " + std::to_string(a.point));
    m += a.weight;
  }
  mass_ = m;
  if (probability_) {
    const bool ok = mass_.exact() ? (mass_.rat() == 1)
                                  : (std::abs(mass_.value() - 1.0) <= kMassTol);
    if (!ok)
      throw MassError("probability measure has mass " + mass_.to_string());
  }
}

DiscreteMeasure DiscreteMeasure::probability(SpacePtr space, std::vector<Atom> atoms) {
  return DiscreteMeasure(std::move(space), std::move(atoms), true);
}

DiscreteMeasure DiscreteMeasure::nonnegative(SpacePtr space, std::vector<Atom> atoms) {
  return DiscreteMeasure(std::move(space), std::move(atoms), false);
}

DiscreteMeasure DiscreteMeasure::dirac(SpacePtr space, int point) {
  return probability(std::move(space), {{point, Weight::integer(1)}});
}

DiscreteMeasure DiscreteMeasure::zero(SpacePtr space) {
  return nonnegative(std::move(space), {});
}

bool DiscreteMeasure::is_probability() const {
  if (mass_.exact()) return mass_.rat() == 1;
  return std::abs(mass_.value() - 1.0) <= kMassTol;
}

Weight DiscreteMeasure::weight_at(int point) const {
  auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), point,
      [](const Atom& a, int p) { return a.point < p; });
  if (it != atoms_.end() && it->point == point) return it->weight;
  return Weight();
}

std::vector<int> DiscreteMeasure::support() const {
  std::vector<int> out;
  out.reserve(atoms_.size());
  for (const auto& a : atoms_)
    if (!a.weight.is_zero()) out.push_back(a.point);
  return out;
}

int DiscreteMeasure::support_size() const {
  int n = 0;
  for (const auto& a : atoms_)
    if (!a.weight.is_zero()) ++n;
  return n;
}

DiscreteMeasure DiscreteMeasure::scaled(const Weight& factor) const {
  if (factor.negative()) throw MassError("scale factor is negative");
  std::vector<Atom> out = atoms_;
  for (auto& a : out) a.weight = a.weight * factor;
  return nonnegative(space_, std::move(out));
}

DiscreteMeasure DiscreteMeasure::plus(const DiscreteMeasure& other) const {
  if (!udseq::same_space(*this, other))
    throw SpaceMismatchError("sum of measures on different spaces");
  std::map<int, Weight> acc;
  for (const auto& a : atoms_) acc.emplace(a.point, Weight()).first->second += a.weight;
  for (const auto& a : other.atoms_) acc.emplace(a.point, Weight()).first->second += a.weight;
  std::vector<Atom> out;
  out.reserve(acc.size());
  for (auto& [p, w] : acc) out.push_back({p, w});
  return nonnegative(space_, std::move(out));
}

DiscreteMeasure DiscreteMeasure::restricted_to(const std::vector<char>& mask) const {
  std::vector<Atom> out;
  for (const auto& a : atoms_)
    if (a.point < static_cast<int>(mask.size()) && mask[a.point]) out.push_back(a);
  return nonnegative(space_, std::move(out));
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  if (mass_.is_zero()) throw MassError("cannot normalize a zero measure");
  std::vector<Atom> out = atoms_;
  for (auto& a : out) a.weight = a.weight / mass_;
  return DiscreteMeasure(space_, std::move(out), true);
}

Weight DiscreteMeasure::mass_inside(const std::vector<char>& mask) const {
  Weight m;
  for (const auto& a : atoms_)
    if (a.point < static_cast<int>(mask.size()) && mask[a.point]) m += a.weight;
  return m;
}

Weight DiscreteMeasure::mass_outside(const std::vector<char>& mask) const {
  Weight m;
  for (const auto& a : atoms_)
    if (a.point >= static_cast<int>(mask.size()) || !mask[a.point]) m += a.weight;
  return m;
}

bool DiscreteMeasure::equal_measure(const DiscreteMeasure& other) const {
  if (!udseq::same_space(*this, other)) return false;
  std::size_t i = 0, j = 0;
  const auto& a = atoms_;
  const auto& b = other.atoms_;
  while (i < a.size() || j < b.size()) {
    while (i < a.size() && a[i].weight.is_zero()) ++i;
    while (j < b.size() && b[j].weight.is_zero()) ++j;
    if (i >= a.size() || j >= b.size()) break;
    if (a[i].point != b[j].point || a[i].weight != b[j].weight) return false;
    ++i;
    ++j;
  }
  while (i < a.size() && a[i].weight.is_zero()) ++i;
  while (j < b.size() && b[j].weight.is_zero()) ++j;
  return i == a.size() && j == b.size();
}

bool same_space(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return same_space(a.space(), b.space());
}

std::vector<char> point_mask(const MetricSpace& space, const std::vector<int>& points) {
  std::vector<char> mask(space.size(), 0);
  for (int p : points) {
    if (p < 0 || p >= space.size()) throw RangeError("mask point out of range");
    mask[p] = 1;
  }
  return mask;
}

PointSequence::PointSequence(SpacePtr space, std::vector<int> ids)
    : space_(std::move(space)), ids_(std::move(ids)) {
  if (!space_) throw ShapeError("sequence requires a space");
  for (int id : ids_) {
    if (id < 0 || id >= space_->size())
      throw RangeError("sequence id " + std::to_string(id) + " out of range");
  }
}

DiscreteMeasure empirical(const PointSequence& seq, int n) {
  if (n < 1 || n > seq.length())
    throw RangeError("empirical horizon " + std::to_string(n) +
                     " outside [1, " + std::to_string(seq.length()) + "]");
  std::map<int, std::int64_t> counts;
  for (int i = 0; i < n; ++i) ++counts[seq.ids()[i]];
  std::vector<Atom> atoms;
  atoms.reserve(counts.size());
  for (const auto& [p, c] : counts) atoms.push_back({p, Weight::ratio(c, n)});
  return DiscreteMeasure::probability(seq.space(), std::move(atoms));
}

}  // namespace udseq
