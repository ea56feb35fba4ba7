#pragma once

#include <vector>

#include "udseq/measure.hpp"
#include "udseq/test_function.hpp"
#include "udseq/weight.hpp"

namespace udseq {

struct DecompositionOptions {
  // Require approximator supports inside their piece (the gluing
  // contract); marginal schedules for product constructions relax it.
  bool require_support_in_piece = true;
};

// Increasing chain of finite pieces X_1 c X_2 c ... covering the target's
// mass, with per-piece approximator schedules: for piece l, a sequence
// k -> mu_{l,k} of measures of mass exactly mu(X_l \ X_{l-1}).
// Pieces beyond the materialized chain carry zero mass and zero
// approximators, so glued indices may exceed the piece count.
class PieceDecomposition {
public:
  using Options = DecompositionOptions;

  static PieceDecomposition with_approximators(
      SpacePtr space, DiscreteMeasure target, std::vector<std::vector<int>> pieces,
      std::vector<std::vector<DiscreteMeasure>> approximators, Options options = {});

  // Convenience path: approximator l,k is the quota discretization of
  // the normalized piece restriction at length k, rescaled to the piece
  // mass.
  static PieceDecomposition with_quota_defaults(SpacePtr space,
                                                DiscreteMeasure target,
                                                std::vector<std::vector<int>> pieces,
                                                int horizon, Options options = {});

  const SpacePtr& space() const { return space_; }
  const DiscreteMeasure& target() const { return target_; }
  int piece_count() const { return static_cast<int>(pieces_.size()); }
  int horizon() const { return horizon_; }

  const std::vector<int>& piece(int l) const;  // 1-based, clamped at the last piece
  std::vector<char> piece_mask(int l) const;   // l = 0 gives the empty set
  Weight chain_mass(int l) const;              // mu(X_l)
  Weight piece_mass(int l) const;              // mu(X_l \ X_{l-1}); 0 beyond the chain
  DiscreteMeasure restriction(int l) const;    // I_{X_l \ X_{l-1}} . mu
  const DiscreteMeasure& approximator(int l, int k) const;

private:
  PieceDecomposition(SpacePtr space, DiscreteMeasure target,
                     std::vector<std::vector<int>> pieces,
                     std::vector<std::vector<DiscreteMeasure>> approximators,
                     Options options);

  SpacePtr space_;
  DiscreteMeasure target_;
  std::vector<std::vector<int>> pieces_;
  std::vector<std::vector<DiscreteMeasure>> approximators_;
  std::vector<Weight> chain_mass_;  // chain_mass_[l] = mu(X_{l+1})
  DiscreteMeasure zero_;
  int horizon_ = 0;
};

// nu_n = c_n^{-1} [mu_{1,n} + ... + mu_{n,n}] with c_n = mu(X_n); the
// identity c_n = mu(X_n) is asserted exactly.
DiscreteMeasure glue(const PieceDecomposition& decomp, int n);

struct GlueConvergenceReport {
  double eps = 0.0;
  int n1 = 0;        // first index whose piece-mass tail is below eps
  int m = 0;         // approximator index from which per-piece errors are below eps/n1
  int horizon = 0;   // largest glued index checked
  double achieved = 0.0;  // max |I(f, mu) - I(f, nu_n)| over n in [m, horizon]
  double bound = 0.0;     // 4 * eps
  bool pass = false;
};

GlueConvergenceReport glue_convergence_check(const PieceDecomposition& decomp,
                                             const TestFunction& f, double eps);

struct TightnessEntry {
  double eps = 0.0;
  std::vector<int> compact_set;  // K_eps, ascending point ids
  Weight bound;                  // recomputed sup_n nu_n(X \ K_eps)
  double limit = 0.0;            // 3 * eps
};

struct TightnessCertificate {
  int measure_count = 0;
  std::vector<TightnessEntry> entries;
};

// K_eps is the union of the approximator supports of the first n1
// pieces; throws NoCertificateError when even the full materialized
// union cannot hold the escape below 3*eps.
TightnessCertificate tightness_certificate(
    const std::vector<DiscreteMeasure>& measures, const PieceDecomposition& decomp,
    const std::vector<double>& eps_list);

}  // namespace udseq
