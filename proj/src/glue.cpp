#include "udseq/glue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "udseq/construct.hpp"
#include "udseq/errors.hpp"

namespace udseq {

namespace {
constexpr double kFloatTol = 1e-12;

bool weight_equals(const Weight& a, const Weight& b) {
  if (a.exact() && b.exact()) return a == b;
  return std::abs(a.value() - b.value()) <= kFloatTol;
}
}  // namespace

PieceDecomposition::PieceDecomposition(
    SpacePtr space, DiscreteMeasure target, std::vector<std::vector<int>> pieces,
    std::vector<std::vector<DiscreteMeasure>> approximators, Options options)
    : space_(std::move(space)),
      target_(std::move(target)),
      pieces_(std::move(pieces)),
      approximators_(std::move(approximators)),
      zero_(DiscreteMeasure::zero(space_)) {
  if (!space_) throw ShapeError("decomposition requires a space");
  if (!same_space(target_.space(), space_))
    throw SpaceMismatchError("target lives on a different space");
  if (!target_.is_probability())
    throw MassError("decomposition target must be a probability measure");
  if (pieces_.empty()) throw ShapeError("decomposition requires at least one piece");

  // Nesting X_l <= X_{l+1}; canonicalize each piece sorted unique.
  for (auto& p : pieces_) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    for (int pt : p)
      if (pt < 0 || pt >= space_->size())
        throw RangeError("piece point out of range");
  }
  for (std::size_t l = 1; l < pieces_.size(); ++l) {
    if (!std::includes(pieces_[l].begin(), pieces_[l].end(),
                       pieces_[l - 1].begin(), pieces_[l - 1].end()))
      throw InputError("pieces are not an increasing chain at index " +
                       std::to_string(l + 1));
  }

  chain_mass_.reserve(pieces_.size());
  for (std::size_t l = 0; l < pieces_.size(); ++l)
    chain_mass_.push_back(target_.mass_inside(
        point_mask(*space_, pieces_[l])));
  if (!weight_equals(chain_mass_.back(), Weight::integer(1)))
    throw MassError("target mass of the piece union is " +
                    chain_mass_.back().to_string() + ", expected 1");

  if (approximators_.size() != pieces_.size())
    throw ShapeError("one approximator schedule required per piece");
  horizon_ = approximators_.empty() ? 0
                                    : static_cast<int>(approximators_[0].size());
  for (std::size_t l = 0; l < approximators_.size(); ++l) {
    if (static_cast<int>(approximators_[l].size()) != horizon_)
      throw ShapeError("approximator schedules have mixed horizons");
    const Weight expected = piece_mass(static_cast<int>(l) + 1);
    const auto mask = piece_mask(static_cast<int>(l) + 1);
    for (int k = 0; k < horizon_; ++k) {
      const auto& m = approximators_[l][static_cast<std::size_t>(k)];
      if (!same_space(m.space(), space_))
        throw SpaceMismatchError("approximator lives on a different space");
      if (!weight_equals(m.mass(), expected))
        throw MassError("approximator mass " + m.mass().to_string() +
                        " differs from piece mass " + expected.to_string() +
                        " (piece " + std::to_string(l + 1) + ", index " +
                        std::to_string(k + 1) + ")");
      if (options.require_support_in_piece && !m.mass_outside(mask).is_zero())
        throw InputError("approximator support leaves piece " +
                         std::to_string(l + 1));
    }
  }
}

PieceDecomposition PieceDecomposition::with_approximators(
    SpacePtr space, DiscreteMeasure target, std::vector<std::vector<int>> pieces,
    std::vector<std::vector<DiscreteMeasure>> approximators, Options options) {
  return PieceDecomposition(std::move(space), std::move(target), std::move(pieces),
                            std::move(approximators), options);
}

PieceDecomposition PieceDecomposition::with_quota_defaults(
    SpacePtr space, DiscreteMeasure target, std::vector<std::vector<int>> pieces,
    int horizon, Options options) {
  if (horizon < 1) throw RangeError("horizon must be at least 1");
  // Build a probe (no approximators would fail shape checks, so compute
  // restrictions directly here).
  std::vector<std::vector<DiscreteMeasure>> approx;
  approx.reserve(pieces.size());
  std::vector<char> prev_mask(space->size(), 0);
  for (const auto& piece : pieces) {
    auto mask = point_mask(*space, piece);
    std::vector<char> fresh(space->size(), 0);
    for (int p = 0; p < space->size(); ++p) fresh[p] = mask[p] && !prev_mask[p];
    const DiscreteMeasure restricted = target.restricted_to(fresh);
    std::vector<DiscreteMeasure> sched;
    sched.reserve(horizon);
    for (int k = 1; k <= horizon; ++k) {
      if (restricted.mass().is_zero()) {
        sched.push_back(DiscreteMeasure::zero(space));
      } else {
        const auto seq = quota_sequence(restricted.normalized(), k);
        sched.push_back(empirical(seq, k).scaled(restricted.mass()));
      }
    }
    approx.push_back(std::move(sched));
    prev_mask = mask;
  }
  return PieceDecomposition(std::move(space), std::move(target), std::move(pieces),
                            std::move(approx), options);
}

const std::vector<int>& PieceDecomposition::piece(int l) const {
  if (l < 1) throw RangeError("piece index must be positive");
  const int idx = std::min(l, piece_count()) - 1;
  return pieces_[static_cast<std::size_t>(idx)];
}

std::vector<char> PieceDecomposition::piece_mask(int l) const {
  if (l <= 0) return std::vector<char>(space_->size(), 0);
  return point_mask(*space_, piece(l));
}

Weight PieceDecomposition::chain_mass(int l) const {
  if (l <= 0) return Weight();
  const int idx = std::min(l, piece_count()) - 1;
  return chain_mass_[static_cast<std::size_t>(idx)];
}

Weight PieceDecomposition::piece_mass(int l) const {
  if (l < 1) throw RangeError("piece index must be positive");
  if (l > piece_count()) return Weight();
  return chain_mass(l) - chain_mass(l - 1);
}

DiscreteMeasure PieceDecomposition::restriction(int l) const {
  if (l < 1) throw RangeError("piece index must be positive");
  if (l > piece_count()) return zero_;
  auto mask = piece_mask(l);
  const auto prev = piece_mask(l - 1);
  for (int p = 0; p < space_->size(); ++p)
    if (prev[p]) mask[p] = 0;
  return target_.restricted_to(mask);
}

const DiscreteMeasure& PieceDecomposition::approximator(int l, int k) const {
  if (l < 1) throw RangeError("piece index must be positive");
  if (k < 1 || k > horizon_)
    throw RangeError("approximator index " + std::to_string(k) +
                     " outside the materialized horizon " + std::to_string(horizon_));
  if (l > piece_count()) return zero_;
  return approximators_[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(k - 1)];
}

DiscreteMeasure glue(const PieceDecomposition& decomp, int n) {
  if (n < 1) throw RangeError("glue index must be positive");
  const int top = std::min(n, decomp.piece_count());
  DiscreteMeasure sum = DiscreteMeasure::zero(decomp.space());
  for (int j = 1; j <= top; ++j) sum = sum.plus(decomp.approximator(j, n));

  const Weight c_n = sum.mass();
  const Weight expected = decomp.chain_mass(top);
  if (c_n.exact() && expected.exact()) {
    if (c_n != expected)
      throw Error("glue normalizer " + c_n.to_string() +
                  " differs from the chain mass " + expected.to_string());
  } else if (std::abs(c_n.value() - expected.value()) > kFloatTol) {
    throw Error("glue normalizer drifted from the chain mass");
  }
  if (c_n.is_zero())
    throw DegenerateError("all mass lies outside the first " + std::to_string(n) +
                          " piece(s)");
  return sum.normalized();
}

GlueConvergenceReport glue_convergence_check(const PieceDecomposition& decomp,
                                             const TestFunction& f, double eps) {
  if (eps <= 0.0) throw RangeError("eps must be positive");
  if (!same_space(f.space(), decomp.space()))
    throw DomainError("test function is undefined on the decomposition space");

  GlueConvergenceReport rep;
  rep.eps = eps;
  rep.bound = 4.0 * eps;
  rep.horizon = decomp.horizon();

  // Tail of piece masses strictly beyond n: 1 - mu(X_n).
  int n1 = decomp.piece_count();
  for (int n = 1; n <= decomp.piece_count(); ++n) {
    if ((Weight::integer(1) - decomp.chain_mass(n)).value() < eps) {
      n1 = n;
      break;
    }
  }
  rep.n1 = n1;

  // Per-piece integral errors for pieces 1..n1 at every materialized
  // index; m is the first index from which all stay below eps / n1.
  const int K = decomp.horizon();
  const double per_piece = eps / n1;
  std::vector<std::vector<double>> err(static_cast<std::size_t>(n1));
  for (int l = 1; l <= n1; ++l) {
    const double base = integrate(decomp.restriction(l), f);
    auto& row = err[static_cast<std::size_t>(l - 1)];
    row.resize(static_cast<std::size_t>(K) + 1, 0.0);
    for (int k = 1; k <= K; ++k)
      row[static_cast<std::size_t>(k)] =
          std::abs(base - integrate(decomp.approximator(l, k), f));
  }
  if (K < n1)
    throw HorizonError("approximator horizon " + std::to_string(K) +
                           " is shorter than the required n1 = " + std::to_string(n1),
                       std::numeric_limits<double>::infinity());
  int m = -1;
  double suffix = 0.0;  // max per-piece error over indices >= cand
  double best_suffix = std::numeric_limits<double>::infinity();
  for (int cand = K; cand >= n1; --cand) {
    for (int l = 1; l <= n1; ++l)
      suffix = std::max(suffix, err[static_cast<std::size_t>(l - 1)]
                                   [static_cast<std::size_t>(cand)]);
    best_suffix = std::min(best_suffix, suffix);
    if (suffix < per_piece) m = cand;  // suffix grows downward: smallest wins
  }
  if (m < 0)
    throw HorizonError(
        "horizon " + std::to_string(K) + " too short: best per-piece error " +
            std::to_string(best_suffix) + " is not below " + std::to_string(per_piece),
        best_suffix);
  rep.m = m;

  const double target_integral = integrate(decomp.target(), f);
  double achieved = 0.0;
  for (int n = m; n <= K; ++n)
    achieved = std::max(achieved,
                        std::abs(target_integral - integrate(glue(decomp, n), f)));
  rep.achieved = achieved;
  rep.pass = achieved <= rep.bound + kFloatTol;
  return rep;
}

TightnessCertificate tightness_certificate(
    const std::vector<DiscreteMeasure>& measures, const PieceDecomposition& decomp,
    const std::vector<double>& eps_list) {
  if (measures.empty()) throw ShapeError("at least one measure required");
  for (const auto& m : measures)
    if (!same_space(m.space(), decomp.space()))
      throw SpaceMismatchError("measure lives outside the decomposition space");

  auto support_union = [&](int up_to_piece) {
    std::vector<char> mask(decomp.space()->size(), 0);
    for (int l = 1; l <= std::min(up_to_piece, decomp.piece_count()); ++l)
      for (int k = 1; k <= decomp.horizon(); ++k)
        for (const auto& a : decomp.approximator(l, k).atoms())
          if (!a.weight.is_zero()) mask[a.point] = 1;
    return mask;
  };
  auto escape_sup = [&](const std::vector<char>& mask) {
    Weight sup;
    for (const auto& m : measures) {
      const Weight esc = m.mass_outside(mask);
      if (sup < esc) sup = esc;
    }
    return sup;
  };

  TightnessCertificate cert;
  cert.measure_count = static_cast<int>(measures.size());
  for (double eps : eps_list) {
    if (eps <= 0.0) throw RangeError("eps must be positive");
    int n1 = decomp.piece_count();
    for (int n = 1; n <= decomp.piece_count(); ++n) {
      if ((Weight::integer(1) - decomp.chain_mass(n)).value() < eps) {
        n1 = n;
        break;
      }
    }
    const auto mask = support_union(n1);
    const Weight bound = escape_sup(mask);
    if (bound.value() > 3.0 * eps + kFloatTol) {
      const Weight best = escape_sup(support_union(decomp.piece_count()));
      throw NoCertificateError(
          "escape mass " + bound.to_string() + " exceeds 3*eps for eps=" +
              std::to_string(eps) + "; smallest achievable bound is " +
              best.to_string(),
          best.value());
    }
    TightnessEntry entry;
    entry.eps = eps;
    for (int p = 0; p < decomp.space()->size(); ++p)
      if (mask[p]) entry.compact_set.push_back(p);
    entry.bound = bound;
    entry.limit = 3.0 * eps;
    cert.entries.push_back(std::move(entry));
  }
  return cert;
}

}  // namespace udseq
